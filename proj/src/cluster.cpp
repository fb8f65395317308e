#include "qfp/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "qfp/corpus.hpp"
#include "qfp/error.hpp"
#include "qfp/rng.hpp"

namespace qfp {

using nlohmann::json;

std::vector<std::size_t> ClusterAssignment::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (auto l : labels) ++sizes[l];
  return sizes;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

Matrix seed_centroids(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows;
  Matrix centroids(k, x.cols);
  std::vector<double> best(n, std::numeric_limits<double>::max());

  auto take = [&](std::size_t c, std::size_t row) {
    std::copy(x.row(row).begin(), x.row(row).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) best[i] = std::min(best[i], sq_dist(x.row(i), centroids.row(c)));
  };

  take(0, rng.index(n));
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(best.begin(), best.end(), 0.0);
    std::size_t pick = n - 1;
    if (total <= 0.0) {
      pick = rng.index(n);
    } else {
      const double r = rng.uniform() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cum += best[i];
        if (r < cum) {
          pick = i;
          break;
        }
      }
    }
    take(c, pick);
  }
  return centroids;
}

// Nearest-centroid labelling (ties to the lowest centroid index), then
// farthest-point repair of empty clusters. Returns the resulting inertia.
double assign(const Matrix& x, Matrix& centroids, std::vector<std::size_t>& labels) {
  const std::size_t n = x.rows, k = centroids.rows;
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::max();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(x.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    labels[i] = arg;
    dist[i] = best;
  }

  std::vector<std::size_t> sizes(k, 0);
  for (auto l : labels) ++sizes[l];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    std::size_t far = n;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i)
      if (sizes[labels[i]] > 1 && dist[i] > far_d) {
        far_d = dist[i];
        far = i;
      }
    if (far == n) throw DataError("k-means: cannot repair empty cluster");
    --sizes[labels[far]];
    labels[far] = c;
    sizes[c] = 1;
    dist[far] = 0.0;
    std::copy(x.row(far).begin(), x.row(far).end(), centroids.row(c).begin());
  }
  return std::accumulate(dist.begin(), dist.end(), 0.0);
}

Matrix update(const Matrix& x, const std::vector<std::size_t>& labels, std::size_t k) {
  Matrix sums(k, x.cols);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto dst = sums.row(labels[i]);
    const auto src = x.row(i);
    for (std::size_t j = 0; j < x.cols; ++j) dst[j] += src[j];
    ++counts[labels[i]];
  }
  for (std::size_t c = 0; c < k; ++c)
    for (auto& v : sums.row(c)) v /= static_cast<double>(counts[c]);
  return sums;
}

}  // namespace

ClusterAssignment kmeans_pp(const Matrix& features, std::size_t k, std::uint64_t seed,
                            const KMeansOptions& opts) {
  if (k < 2) throw ConfigError("k-means: k must be at least 2");
  if (k > features.rows)
    throw ConfigError("k-means: k=" + std::to_string(k) + " exceeds " +
                      std::to_string(features.rows) + " rows");

  Rng rng(seed);
  ClusterAssignment out;
  out.k = k;
  out.seed = seed;
  out.labels.assign(features.rows, 0);
  out.centroids = seed_centroids(features, k, rng);
  out.inertia_trace.push_back(assign(features, out.centroids, out.labels));

  for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
    Matrix next = update(features, out.labels, k);
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      shift = std::max(shift, std::sqrt(sq_dist(next.row(c), out.centroids.row(c))));
    out.centroids = std::move(next);
    out.inertia_trace.push_back(assign(features, out.centroids, out.labels));
    out.iterations = iter + 1;
    if (shift < opts.tol) break;
  }
  return out;
}

double inertia(const Matrix& features, const Matrix& centroids,
               const std::vector<std::size_t>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < features.rows; ++i) s += sq_dist(features.row(i), centroids.row(labels[i]));
  return s;
}

double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  if (a.size() != b.size()) throw DataError("ARI: labellings differ in length");
  const std::size_t n = a.size();
  const std::size_t ka = a.empty() ? 0 : *std::max_element(a.begin(), a.end()) + 1;
  const std::size_t kb = b.empty() ? 0 : *std::max_element(b.begin(), b.end()) + 1;
  std::vector<double> table(ka * kb, 0.0), rows(ka, 0.0), cols(kb, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    table[a[i] * kb + b[i]] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sum_rows = 0, sum_cols = 0;
  for (double v : table) index += c2(v);
  for (double v : rows) sum_rows += c2(v);
  for (double v : cols) sum_cols += c2(v);
  const double expected = sum_rows * sum_cols / c2(static_cast<double>(n));
  const double max_index = (sum_rows + sum_cols) / 2;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

namespace {

void kd_build(const Matrix& x, std::vector<std::size_t>& idx, std::size_t begin, std::size_t end,
              std::size_t depth, std::size_t capacity, std::vector<KdLeaf>& leaves) {
  const std::size_t n = end - begin;
  if (n <= capacity || x.cols == 0) {
    leaves.push_back({n, depth});
    return;
  }
  std::vector<double> vals(n);
  for (std::size_t d0 = 0; d0 < x.cols; ++d0) {
    const std::size_t dim = (depth + d0) % x.cols;
    for (std::size_t i = 0; i < n; ++i) vals[i] = x(idx[begin + i], dim);
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(n / 2), vals.end());
    const double median = vals[n / 2];

    auto first = idx.begin() + static_cast<std::ptrdiff_t>(begin);
    auto last = idx.begin() + static_cast<std::ptrdiff_t>(end);
    auto mid = std::stable_partition(first, last, [&](std::size_t r) { return x(r, dim) < median; });
    if (mid == first)
      mid = std::stable_partition(first, last, [&](std::size_t r) { return x(r, dim) <= median; });
    if (mid == first || mid == last) continue;  // constant along dim

    const auto split = static_cast<std::size_t>(mid - idx.begin());
    kd_build(x, idx, begin, split, depth + 1, capacity, leaves);
    kd_build(x, idx, split, end, depth + 1, capacity, leaves);
    return;
  }
  leaves.push_back({n, depth});  // all points identical
}

}  // namespace

KdDensityReport kd_density_report(const Matrix& features, std::size_t leaf_capacity) {
  if (leaf_capacity < 1) throw ConfigError("kd report: leaf capacity must be at least 1");
  KdDensityReport rep;
  rep.leaf_capacity = leaf_capacity;
  rep.points = features.rows;
  if (features.rows == 0) return rep;
  std::vector<std::size_t> idx(features.rows);
  std::iota(idx.begin(), idx.end(), 0);
  kd_build(features, idx, 0, idx.size(), 0, leaf_capacity, rep.leaves);
  for (const auto& leaf : rep.leaves) {
    ++rep.occupancy_histogram[leaf.count];
    rep.max_depth = std::max(rep.max_depth, leaf.depth);
  }
  return rep;
}

std::map<std::size_t, std::vector<std::string>> sample_seed_set(
    const ClusterAssignment& assignment, const std::vector<std::string>& ids,
    std::size_t per_cluster, std::uint64_t seed) {
  if (per_cluster < 1) throw ConfigError("sample: per_cluster must be at least 1");
  if (ids.size() != assignment.labels.size()) throw DataError("sample: ids and labels differ in length");

  std::vector<std::vector<std::size_t>> members(assignment.k);
  for (std::size_t i = 0; i < ids.size(); ++i) members[assignment.labels[i]].push_back(i);

  std::map<std::size_t, std::vector<std::string>> out;
  for (std::size_t c = 0; c < assignment.k; ++c) {
    auto& m = members[c];
    Rng rng(derive_seed(seed, c));
    const std::size_t take = std::min(per_cluster, m.size());
    for (std::size_t i = 0; i < take; ++i) std::swap(m[i], m[i + rng.index(m.size() - i)]);
    std::vector<std::size_t> chosen(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(chosen.begin(), chosen.end());
    auto& dst = out[c];
    for (auto row : chosen) dst.push_back(ids[row]);
  }
  return out;
}

void save_assignment(const ClusterAssignment& a, const std::vector<std::string>& ids,
                     const std::filesystem::path& path) {
  if (ids.size() != a.labels.size()) throw DataError("save_assignment: ids and labels differ in length");
  std::string lines;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    lines += json{{"id", ids[i]}, {"cluster", a.labels[i]}}.dump();
    lines += '\n';
  }
  write_text_file(path, lines);

  json centroids = json::array();
  for (std::size_t c = 0; c < a.centroids.rows; ++c)
    centroids.push_back(std::vector<double>(a.centroids.row(c).begin(), a.centroids.row(c).end()));
  const json meta{{"format", "qfp-assignment"}, {"version", 1},       {"k", a.k},
                  {"seed", a.seed},             {"iterations", a.iterations},
                  {"dim", a.centroids.cols},    {"inertia_trace", a.inertia_trace},
                  {"centroids", centroids}};
  write_text_file(path.string() + ".meta.json", meta.dump(1) + "\n");
}

ClusterAssignment load_assignment(const std::filesystem::path& path, std::vector<std::string>* ids) {
  ClusterAssignment a;
  try {
    const json meta = json::parse(read_text_file(path.string() + ".meta.json"));
    if (meta.value("format", "") != "qfp-assignment") throw FormatError(path.string() + ": bad assignment metadata");
    if (meta.value("version", 0) != 1) throw FormatError(path.string() + ": unsupported assignment version");
    a.k = meta.at("k").get<std::size_t>();
    a.seed = meta.at("seed").get<std::uint64_t>();
    a.iterations = meta.at("iterations").get<std::size_t>();
    a.inertia_trace = meta.at("inertia_trace").get<std::vector<double>>();
    const auto dim = meta.at("dim").get<std::size_t>();
    a.centroids = Matrix(a.k, dim);
    const auto& rows = meta.at("centroids");
    if (rows.size() != a.k) throw FormatError(path.string() + ": centroid count mismatch");
    for (std::size_t c = 0; c < a.k; ++c) {
      const auto row = rows[c].get<std::vector<double>>();
      if (row.size() != dim) throw FormatError(path.string() + ": centroid width mismatch");
      std::copy(row.begin(), row.end(), a.centroids.row(c).begin());
    }

    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      const auto label = j.at("cluster").get<std::size_t>();
      if (label >= a.k) throw FormatError(path.string() + ": cluster id out of range");
      a.labels.push_back(label);
      if (ids) ids->push_back(j.at("id").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return a;
}

}  // namespace qfp
