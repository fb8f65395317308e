#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qfp/corpus.hpp"
#include "qfp/fingerprint.hpp"

namespace qfp {

enum class KfpStatus { survived, finalized, dropped, exited };

std::string_view to_string(KfpStatus s);

struct KfpHistoryEntry {
  std::size_t t = 0;
  std::size_t cluster_id = 0;
  std::size_t detected = 0;     // |C_i^t|
  std::size_t vocab_size = 0;   // of the model trained on C_i^t (0 when none)
  double loss_final = 0.0;
  std::uint64_t set_hash = 0;   // of the detected ids, to expose equal-size oscillation
  KfpStatus status = KfpStatus::survived;
};

struct KfpOptions {
  FingerprintOptions fingerprint;
  std::size_t max_iters = 20;
  std::uint64_t seed = 0;
};

struct KfpClusterOutcome {
  std::size_t cluster_id = 0;
  std::size_t initial_size = 0;
  std::size_t iterations = 0;  // DETECT rounds this system took part in
  KfpStatus status = KfpStatus::survived;
  std::vector<QuestionRecord> refined;  // final DETECT over the base cluster
};

struct KfpResult {
  std::vector<FingerprintSystem> final_systems;  // F, in cluster-id order
  std::vector<KfpClusterOutcome> clusters;       // one per input cluster
  std::vector<KfpHistoryEntry> history;
  std::size_t rounds = 0;
  bool hit_max_iters = false;
};

// Iterative DETECT / TRAIN refinement. Baseline systems are trained on the
// seed samples; each round a system detects over its base cluster and is
// dropped (nothing detected), finalized (|C_i^t| == m_i^{t-1}) or retrained
// from scratch on its detections with a rebuilt vocabulary.
KfpResult kfp_run(const std::vector<std::vector<QuestionRecord>>& base_clusters,
                  const std::vector<std::vector<QuestionRecord>>& seeds, const KfpOptions& opts,
                  std::size_t jobs = 1);

struct KfpReportRow {
  std::size_t cluster_id = 0;
  std::size_t initial_size = 0;
  std::size_t final_size = 0;
  std::size_t iterations = 0;
  KfpStatus status = KfpStatus::survived;
  double self_recall = 0.0;
  std::vector<double> cross_detection;  // fraction of each final cluster detected by this system
};

std::vector<KfpReportRow> kfp_report(const KfpResult& result);

void save_kfp_history(const std::vector<KfpHistoryEntry>& history, const std::filesystem::path& path);

}  // namespace qfp
