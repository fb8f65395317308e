#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "qfp/corpus.hpp"
#include "qfp/fingerprint.hpp"
#include "qfp/matrix.hpp"

namespace qfp {

// cells(i, j) = fraction of cluster j's questions detected by system i.
struct ConfusionMatrix {
  std::size_t k = 0;
  Matrix cells;
  double threshold = 0.0;

  double off_diagonal_max() const;
  double off_diagonal_sum() const;
};

// Similarities of every question of every cluster under every system.
// sims[i][j][q] = sim of system i on question q of cluster j.
struct SimTable {
  std::vector<std::vector<std::vector<double>>> sims;
};

SimTable cross_similarities(const std::vector<FingerprintSystem>& systems,
                            const std::vector<std::vector<QuestionRecord>>& clusters,
                            std::size_t jobs = 1);

// Thresholds an existing similarity table; cheaper for threshold sweeps.
ConfusionMatrix confusion_from_sims(const SimTable& table, double threshold);

ConfusionMatrix confusion(const std::vector<FingerprintSystem>& systems,
                          const std::vector<std::vector<QuestionRecord>>& clusters,
                          double threshold, std::size_t jobs = 1);

struct RecallRow {
  std::size_t cluster_id = 0;
  std::size_t cluster_size = 0;
  std::size_t detected = 0;
  double recall = 0.0;
  bool inconsistent = false;  // recall below the configured floor
};

std::vector<RecallRow> recall_table(const std::vector<FingerprintSystem>& systems,
                                    const std::vector<std::vector<QuestionRecord>>& clusters,
                                    double threshold, double low_recall_floor = 0.5);

// Mean indicator vector of the members over the vocabulary.
std::vector<double> cluster_signature(const std::vector<QuestionRecord>& members,
                                      const SymbolVocabulary& vocab,
                                      const FeaturizerConfig& featurizer);

// Writes "<stem>.csv" (k rows of k comma-separated cells) and "<stem>.json" (metadata).
void export_heatmap(const ConfusionMatrix& m, const std::filesystem::path& stem);
Matrix read_heatmap_csv(const std::filesystem::path& csv_path);

}  // namespace qfp
