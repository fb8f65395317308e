#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qfp/autoencoder.hpp"
#include "qfp/corpus.hpp"
#include "qfp/featurize.hpp"

namespace qfp {

// Jaccard overlap between the active indices of x and the |A| largest entries
// of y (ties go to the lower index). Zero when x has no active entry.
double sim(std::span<const double> x, std::span<const double> y);

// Indices of the n largest values, ties broken by lowest index, returned ascending.
std::vector<std::size_t> largest_indices(std::span<const double> y, std::size_t n);

struct FingerprintSystem {
  std::size_t cluster_id = 0;
  FeaturizerConfig featurizer;
  SymbolVocabulary vocab;  // built from this cluster's training questions only
  Autoencoder model;
  double threshold = 0.9;
  std::vector<double> loss_trace;
};

struct DetectionResult {
  std::string id;
  double sim = 0.0;
  bool detected = false;
  std::size_t oov_count = 0;
};

struct FingerprintOptions {
  FeaturizerConfig featurizer;
  TrainConfig train;
  double threshold = 0.9;
  std::uint64_t init_seed = 0;
};

FingerprintSystem train_fingerprint(std::size_t cluster_id,
                                    const std::vector<QuestionRecord>& questions,
                                    const FingerprintOptions& opts);

DetectionResult detect(const FingerprintSystem& system, const QuestionRecord& question);

struct BatchDetection {
  std::vector<DetectionResult> results;  // same order as the input
  std::vector<QuestionRecord> detected;
};

BatchDetection detect_batch(const FingerprintSystem& system,
                            const std::vector<QuestionRecord>& questions);

// Bundle directory: model.bin (+ model.bin.json), vocab.txt, system.json.
void save_fingerprint(const FingerprintSystem& system, const std::filesystem::path& dir);
FingerprintSystem load_fingerprint(const std::filesystem::path& dir);

}  // namespace qfp
