#include "qfp/kfingerprints.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include <json.hpp>

#include "qfp/binary_io.hpp"
#include "qfp/error.hpp"
#include "qfp/parallel.hpp"
#include "qfp/rng.hpp"

namespace qfp {

std::string_view to_string(KfpStatus s) {
  switch (s) {
    case KfpStatus::survived: return "survived";
    case KfpStatus::finalized: return "finalized";
    case KfpStatus::dropped: return "dropped";
    case KfpStatus::exited: return "exited";
  }
  return "?";
}

namespace {

struct Slot {
  std::optional<FingerprintSystem> system;
  std::size_t m_prev = 0;
  bool active = true;
  std::vector<QuestionRecord> detected;
};

std::uint64_t id_set_hash(const std::vector<QuestionRecord>& qs) {
  std::uint64_t h = fnv1a(std::string_view{});
  for (const auto& q : qs) {
    h = fnv1a(q.id, h);
    h = fnv1a(std::string_view("\n", 1), h);
  }
  return h;
}

FingerprintSystem train_round(std::size_t cluster_id, std::size_t t,
                              const std::vector<QuestionRecord>& questions, const KfpOptions& opts) {
  FingerprintOptions fo = opts.fingerprint;
  const std::uint64_t s = derive_seed(opts.seed, cluster_id * 1000003ULL + t);
  fo.init_seed = s;
  fo.train.shuffle_seed = derive_seed(s, 1);
  return train_fingerprint(cluster_id, questions, fo);
}

}  // namespace

KfpResult kfp_run(const std::vector<std::vector<QuestionRecord>>& base_clusters,
                  const std::vector<std::vector<QuestionRecord>>& seeds, const KfpOptions& opts,
                  std::size_t jobs) {
  const std::size_t k = base_clusters.size();
  if (k == 0) throw ConfigError("k-fingerprints: no clusters");
  if (seeds.size() != k) throw ConfigError("k-fingerprints: one seed sample per cluster is required");
  for (std::size_t i = 0; i < k; ++i) {
    if (seeds[i].empty()) throw DataError("k-fingerprints: empty seed sample for cluster " + std::to_string(i));
    std::set<std::string> ids;
    for (const auto& q : base_clusters[i]) ids.insert(q.id);
    for (const auto& q : seeds[i])
      if (!ids.contains(q.id))
        throw DataError("k-fingerprints: seed question " + q.id + " is not in cluster " + std::to_string(i));
  }

  KfpResult result;
  result.clusters.resize(k);
  std::vector<Slot> slots(k);
  for (std::size_t i = 0; i < k; ++i) {
    result.clusters[i].cluster_id = i;
    result.clusters[i].initial_size = base_clusters[i].size();
    slots[i].m_prev = seeds[i].size();
  }

  parallel_for(k, jobs, [&](std::size_t i) { slots[i].system = train_round(i, 0, seeds[i], opts); });

  std::size_t t = 1;
  for (; t <= opts.max_iters; ++t) {
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < k; ++i)
      if (slots[i].active) live.push_back(i);
    if (live.empty()) break;
    result.rounds = t;

    parallel_for(live.size(), jobs, [&](std::size_t n) {
      const auto i = live[n];
      slots[i].detected = detect_batch(*slots[i].system, base_clusters[i]).detected;
    });

    std::vector<std::size_t> retrain;
    for (auto i : live) {
      auto& slot = slots[i];
      auto& outcome = result.clusters[i];
      ++outcome.iterations;
      KfpHistoryEntry h{t, i, slot.detected.size(), slot.system->vocab.size(),
                        slot.system->loss_trace.empty() ? 0.0 : slot.system->loss_trace.back(),
                        id_set_hash(slot.detected), KfpStatus::survived};
      if (slot.detected.empty()) {
        slot.active = false;
        slot.system.reset();
        outcome.status = h.status = KfpStatus::dropped;
      } else if (slot.detected.size() == slot.m_prev) {
        slot.active = false;
        outcome.status = h.status = KfpStatus::finalized;
        outcome.refined = slot.detected;
      } else {
        retrain.push_back(i);
      }
      result.history.push_back(h);
    }

    parallel_for(retrain.size(), jobs, [&](std::size_t n) {
      const auto i = retrain[n];
      slots[i].system = train_round(i, t, slots[i].detected, opts);
      slots[i].m_prev = slots[i].detected.size();
    });
    // Survivor rows report the freshly trained model.
    for (auto& h : result.history)
      if (h.t == t && h.status == KfpStatus::survived) {
        h.vocab_size = slots[h.cluster_id].system->vocab.size();
        h.loss_final = slots[h.cluster_id].system->loss_trace.back();
      }
  }

  for (std::size_t i = 0; i < k; ++i) {
    if (!slots[i].active) continue;
    result.hit_max_iters = true;
    auto& outcome = result.clusters[i];
    outcome.status = KfpStatus::exited;
    outcome.refined = detect_batch(*slots[i].system, base_clusters[i]).detected;
    result.history.push_back({result.rounds, i, outcome.refined.size(), slots[i].system->vocab.size(),
                              slots[i].system->loss_trace.back(), id_set_hash(outcome.refined),
                              KfpStatus::exited});
  }

  for (std::size_t i = 0; i < k; ++i)
    if (slots[i].system && slots[i].m_prev > 0) result.final_systems.push_back(std::move(*slots[i].system));
  return result;
}

std::vector<KfpReportRow> kfp_report(const KfpResult& result) {
  std::vector<KfpReportRow> rows;
  for (const auto& c : result.clusters) {
    KfpReportRow row;
    row.cluster_id = c.cluster_id;
    row.initial_size = c.initial_size;
    row.final_size = c.status == KfpStatus::dropped ? 0 : c.refined.size();
    row.iterations = c.iterations;
    row.status = c.status;
    row.cross_detection.assign(result.clusters.size(), 0.0);

    const auto sys = std::find_if(result.final_systems.begin(), result.final_systems.end(),
                                  [&](const FingerprintSystem& s) { return s.cluster_id == c.cluster_id; });
    if (sys != result.final_systems.end()) {
      for (const auto& other : result.clusters) {
        if (other.refined.empty()) continue;
        const auto hits = detect_batch(*sys, other.refined).detected.size();
        row.cross_detection[other.cluster_id] =
            static_cast<double>(hits) / static_cast<double>(other.refined.size());
      }
      row.self_recall = row.cross_detection[c.cluster_id];
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_kfp_history(const std::vector<KfpHistoryEntry>& history, const std::filesystem::path& path) {
  std::string out;
  for (const auto& h : history) {
    out += nlohmann::json{{"t", h.t},
                          {"cluster_id", h.cluster_id},
                          {"m", h.detected},
                          {"vocab_size", h.vocab_size},
                          {"loss_final", h.loss_final},
                          {"set_hash", hex64(h.set_hash)},
                          {"status", to_string(h.status)}}
               .dump();
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace qfp
