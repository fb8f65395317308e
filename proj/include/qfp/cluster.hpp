#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qfp/matrix.hpp"

namespace qfp {

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> labels;  // per row, in [0, k)
  Matrix centroids;                 // k x d
  std::uint64_t seed = 0;
  std::vector<double> inertia_trace;  // objective after each Lloyd assignment step
  std::size_t iterations = 0;

  double inertia() const { return inertia_trace.empty() ? 0.0 : inertia_trace.back(); }
  std::vector<std::size_t> cluster_sizes() const;

  bool operator==(const ClusterAssignment&) const = default;
};

struct KMeansOptions {
  std::size_t max_iters = 300;
  double tol = 1e-6;
};

// K-means++ (D^2 sampling) seeding followed by Lloyd iterations on Euclidean
// distance. Empty clusters are reseeded with the point farthest from its
// centroid. Bit-deterministic for a given seed.
ClusterAssignment kmeans_pp(const Matrix& features, std::size_t k, std::uint64_t seed,
                            const KMeansOptions& opts = {});

// Squared-distance objective of a labelling.
double inertia(const Matrix& features, const Matrix& centroids,
               const std::vector<std::size_t>& labels);

// Adjusted Rand index between two labellings of the same rows.
double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b);

struct KdLeaf {
  std::size_t count = 0;
  std::size_t depth = 0;
};

struct KdDensityReport {
  std::size_t leaf_capacity = 0;
  std::size_t points = 0;
  std::vector<KdLeaf> leaves;  // left-to-right
  std::map<std::size_t, std::size_t> occupancy_histogram;  // leaf count -> number of leaves
  std::size_t max_depth = 0;
};

// K-d tree with median splits on cycling dimensions. Constant dimensions are
// skipped; a node whose points are all identical stays a leaf.
KdDensityReport kd_density_report(const Matrix& features, std::size_t leaf_capacity);

// Uniform sample without replacement of up to per_cluster ids per cluster.
std::map<std::size_t, std::vector<std::string>> sample_seed_set(
    const ClusterAssignment& assignment, const std::vector<std::string>& ids,
    std::size_t per_cluster, std::uint64_t seed);

// Assignment file: JSONL {id, cluster}; centroids and run metadata go to "<path>.meta.json".
void save_assignment(const ClusterAssignment& a, const std::vector<std::string>& ids,
                     const std::filesystem::path& path);
ClusterAssignment load_assignment(const std::filesystem::path& path,
                                  std::vector<std::string>* ids = nullptr);

}  // namespace qfp
