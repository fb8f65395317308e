#include <doctest.h>

#include <set>

#include "qfp/error.hpp"
#include "qfp/kfingerprints.hpp"
#include "qfp/synthetic.hpp"
#include "support.hpp"

using namespace qfp;

namespace {

const std::string kParse = "(SBARQ (WHNP (WDT Which) (NN river)) (SQ (VBZ is) (NP (DT the) (JJS longest))) (. ?))";

std::vector<QuestionRecord> copies(const std::string& prefix, std::size_t n) {
  std::vector<QuestionRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({prefix + std::to_string(i), "", kParse, std::nullopt});
  return out;
}

KfpOptions options() {
  KfpOptions o;
  o.seed = 5;
  o.fingerprint.train.epochs = 150;
  return o;
}

}  // namespace

TEST_CASE("a uniform cluster seeded with itself is a fixed point at t=1") {
  const auto cluster = copies("u", 12);
  const auto r = kfp_run({cluster}, {cluster}, options());
  REQUIRE(r.clusters.size() == 1);
  CHECK(r.clusters[0].status == KfpStatus::finalized);
  CHECK(r.clusters[0].iterations == 1);
  CHECK(r.clusters[0].refined.size() == cluster.size());
  REQUIRE(r.final_systems.size() == 1);
  CHECK(r.final_systems[0].cluster_id == 0);
  CHECK(r.rounds == 1);
  CHECK_FALSE(r.hit_max_iters);
}

TEST_CASE("a system that detects nothing is dropped") {
  // The seed pair gives a vocabulary wider than any single member, so an
  // untrained model cannot reach sim 1 by covering every index.
  auto cluster = copies("d", 6);
  cluster.push_back({"other", "", "(S (NP (PRP it)) (VP (VBD rained) (ADVP (RB again))) (. .))", std::nullopt});
  KfpOptions o = options();
  o.fingerprint.train.epochs = 1;
  o.fingerprint.train.adam.learning_rate = 1e-9;
  o.fingerprint.threshold = 1.0;
  const auto r = kfp_run({cluster}, {{cluster[0], cluster.back()}}, o);
  CHECK(r.clusters[0].status == KfpStatus::dropped);
  CHECK(r.final_systems.empty());
  const auto rows = kfp_report(r);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].status == KfpStatus::dropped);
  CHECK(rows[0].final_size == 0);
}

TEST_CASE("precondition checks") {
  const auto a = copies("a", 3), b = copies("b", 3);
  CHECK_THROWS_AS(kfp_run({}, {}, options()), ConfigError);
  CHECK_THROWS_AS(kfp_run({a}, {a, b}, options()), ConfigError);
  CHECK_THROWS_AS(kfp_run({a}, {{}}, options()), DataError);
  CHECK_THROWS_AS(kfp_run({a}, {b}, options()), DataError);
}

TEST_CASE("refinement on a small corrupted fixture") {
  FixtureConfig fc;
  fc.clusters = 2;
  fc.per_cluster = 30;
  fc.foreign_fraction = 0.3;
  fc.seed = 21;
  const Fixture fx = make_fixture(fc);
  std::vector<std::vector<QuestionRecord>> seeds;
  for (const auto& c : fx.clusters) seeds.emplace_back(c.begin(), c.begin() + 12);
  KfpOptions o = options();
  o.max_iters = 6;
  const auto r = kfp_run(fx.clusters, seeds, o);

  std::set<std::size_t> in_f;
  for (const auto& s : r.final_systems) CHECK(in_f.insert(s.cluster_id).second);
  for (const auto& c : r.clusters) {
    // Refined clusters only ever shrink the base cluster.
    std::set<std::string> base;
    for (const auto& q : fx.clusters[c.cluster_id]) base.insert(q.id);
    for (const auto& q : c.refined) CHECK(base.contains(q.id));
    CHECK(c.refined.size() <= c.initial_size);
    CHECK((c.status == KfpStatus::dropped) != in_f.contains(c.cluster_id));
  }
  for (const auto& h : r.history) CHECK(h.t <= o.max_iters);

  const auto again = kfp_run(fx.clusters, seeds, o);
  REQUIRE(again.history.size() == r.history.size());
  for (std::size_t i = 0; i < r.history.size(); ++i) {
    CHECK(again.history[i].set_hash == r.history[i].set_hash);
    CHECK(again.history[i].loss_final == r.history[i].loss_final);
  }

  const auto rows = kfp_report(r);
  for (const auto& row : rows) {
    if (row.status == KfpStatus::dropped) continue;
    CHECK(row.self_recall == row.cross_detection[row.cluster_id]);
  }

  TempDir dir;
  save_kfp_history(r.history, dir / "h.jsonl");
  CHECK(std::filesystem::file_size(dir / "h.jsonl") > 0);
}

TEST_CASE("status names") {
  CHECK(to_string(KfpStatus::finalized) == "finalized");
  CHECK(to_string(KfpStatus::dropped) == "dropped");
}
