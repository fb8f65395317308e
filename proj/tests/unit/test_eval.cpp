#include <doctest.h>

#include <set>

#include "qfp/error.hpp"
#include "qfp/eval.hpp"
#include "qfp/synthetic.hpp"
#include "support.hpp"

using namespace qfp;

namespace {

const std::string kParse = "(SBARQ (WHNP (WP What)) (SQ (VBZ is) (NP (DT the) (JJ largest) (NN city))) (. ?))";

FingerprintOptions options(std::uint64_t seed) {
  FingerprintOptions o;
  o.init_seed = seed;
  o.train.shuffle_seed = seed + 1;
  return o;
}

// Two styles with disjoint tag sets; systems trained on the first 40 of each.
struct DisjointRun {
  Fixture fx;
  std::vector<FingerprintSystem> systems;
};

const DisjointRun& disjoint_run() {
  static const DisjointRun run = [] {
    FixtureConfig fc;
    fc.clusters = 2;
    fc.per_cluster = 80;
    fc.shared_pos = false;
    fc.seed = 12;
    DisjointRun r{make_fixture(fc), {}};
    for (std::size_t c = 0; c < 2; ++c) {
      const std::vector<QuestionRecord> seeds(r.fx.clusters[c].begin(), r.fx.clusters[c].begin() + 40);
      r.systems.push_back(train_fingerprint(c, seeds, options(40 + c)));
    }
    return r;
  }();
  return run;
}

}  // namespace

TEST_CASE("one memorized question gives [[1]]") {
  const QuestionRecord q{"q", "", kParse, std::nullopt};
  const auto sys = train_fingerprint(0, {q}, options(1));
  const auto m = confusion({sys}, {{q}}, 0.9);
  CHECK(m.k == 1);
  CHECK(m.cells(0, 0) == 1.0);
  CHECK(m.off_diagonal_max() == 0.0);
}

TEST_CASE("disjoint alphabets keep the off-diagonal near zero") {
  const auto& r = disjoint_run();
  const auto m = confusion(r.systems, r.fx.clusters, 0.9);
  CHECK(m.cells(0, 1) <= 0.02);
  CHECK(m.cells(1, 0) <= 0.02);
  CHECK(m.cells(0, 0) >= 0.8);
  CHECK(m.cells(1, 1) >= 0.8);
}

TEST_CASE("property: every cell is non-increasing in the threshold") {
  const auto& r = disjoint_run();
  const auto table = cross_similarities(r.systems, r.fx.clusters, 2);
  CHECK(confusion_from_sims(table, 0.9).cells == confusion(r.systems, r.fx.clusters, 0.9).cells);
  double prev_off = 1e9;
  ConfusionMatrix prev = confusion_from_sims(table, 0.0);
  for (double t = 0.05; t <= 1.0; t += 0.05) {
    const auto m = confusion_from_sims(table, t);
    for (std::size_t i = 0; i < m.cells.data.size(); ++i) CHECK(m.cells.data[i] <= prev.cells.data[i]);
    CHECK(m.off_diagonal_sum() <= prev_off);
    prev_off = m.off_diagonal_sum();
    prev = m;
  }
}

TEST_CASE("recall table agrees with the confusion diagonal") {
  const auto& r = disjoint_run();
  const auto m = confusion(r.systems, r.fx.clusters, 0.9);
  const auto rows = recall_table(r.systems, r.fx.clusters, 0.9);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.cluster_size == r.fx.clusters[row.cluster_id].size());
    CHECK(static_cast<double>(row.detected) == doctest::Approx(m.cells(row.cluster_id, row.cluster_id) * row.cluster_size));
    CHECK(row.recall == m.cells(row.cluster_id, row.cluster_id));
    CHECK_FALSE(row.inconsistent);
  }
}

TEST_CASE("a deliberately mixed cluster is flagged") {
  const auto& r = disjoint_run();
  // Mostly the other style, with a handful of genuine members.
  std::vector<QuestionRecord> mixed(r.fx.clusters[1].begin(), r.fx.clusters[1].begin() + 60);
  mixed.insert(mixed.end(), r.fx.clusters[0].begin() + 40, r.fx.clusters[0].begin() + 50);
  const auto rows = recall_table({r.systems[0]}, {mixed}, 0.9, 0.5);
  CHECK(rows[0].recall < 0.5);
  CHECK(rows[0].inconsistent);
}

TEST_CASE("cluster signatures") {
  FeaturizerConfig fc;
  const QuestionRecord a{"a", "", "(S (NP (NN a)) (VP (VB b)))", std::nullopt};
  const QuestionRecord b{"b", "", "(S (NP (NN a)) (ADJP (JJ c)))", std::nullopt};
  const auto vocab = SymbolVocabulary::build({symbols_for_parse(a.parse, fc), symbols_for_parse(b.parse, fc)});

  const auto one = vectorize(symbols_for_parse(a.parse, fc), vocab).weights;
  CHECK(cluster_signature({a, a, a}, vocab, fc) == one);

  const auto half = cluster_signature({a, b}, vocab, fc);
  const auto other = vectorize(symbols_for_parse(b.parse, fc), vocab).weights;
  for (std::size_t k = 0; k < vocab.size(); ++k) {
    if (one[k] != other[k]) CHECK(half[k] == 0.5);
    else CHECK(half[k] == one[k]);
  }
  CHECK_THROWS_AS(cluster_signature({}, vocab, fc), DataError);
}

TEST_CASE("subset signature support lies inside the superset support") {
  NestedFixtureConfig nc;
  nc.noise = 0.0;  // noise draws are independent per cluster
  nc.per_cluster = 60;
  const Fixture fx = make_nested_fixture(nc);
  FeaturizerConfig fc;
  std::vector<std::vector<Symbol>> sets;
  for (const auto& c : fx.clusters)
    for (const auto& q : c) sets.push_back(symbols_for_parse(q.parse, fc));
  const auto vocab = SymbolVocabulary::build(sets);
  const auto sub = cluster_signature(fx.clusters[0], vocab, fc);
  const auto sup = cluster_signature(fx.clusters[1], vocab, fc);
  std::size_t extra = 0;
  for (std::size_t k = 0; k < vocab.size(); ++k) {
    if (sub[k] > 0.0) CHECK(sup[k] > 0.0);
    extra += sup[k] > 0.0 && sub[k] == 0.0;
  }
  CHECK(extra > 0);
}

TEST_CASE("heatmap export") {
  TempDir dir;
  ConfusionMatrix m;
  m.k = 2;
  m.cells = Matrix(2, 2);
  m.cells(0, 0) = 1.0;
  m.cells(1, 1) = 1.0;
  m.threshold = 0.9;
  export_heatmap(m, dir / "h");
  CHECK(read_text_file(dir / "h.csv") == "1,0\n0,1\n");
  CHECK(std::filesystem::exists(dir / "h.json"));
  CHECK(read_heatmap_csv(dir / "h.csv") == m.cells);

  m.cells(0, 1) = 1.0 / 3.0;
  export_heatmap(m, dir / "g");
  CHECK(read_heatmap_csv(dir / "g.csv") == m.cells);

  write_text_file(dir / "bad.csv", "1,0\n0\n");
  CHECK_THROWS_AS(read_heatmap_csv(dir / "bad.csv"), FormatError);
}

TEST_CASE("threshold sweep writes one heatmap per threshold") {
  const auto& r = disjoint_run();
  const auto table = cross_similarities(r.systems, r.fx.clusters);
  TempDir dir;
  double prev = 1e9;
  for (const double t : {0.5, 0.7, 0.9}) {
    const auto m = confusion_from_sims(table, t);
    char stem[32];
    std::snprintf(stem, sizeof stem, "theta-%.2f", t);
    export_heatmap(m, dir / stem);
    CHECK(m.off_diagonal_sum() <= prev);
    prev = m.off_diagonal_sum();
  }
  std::size_t csvs = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) csvs += e.path().extension() == ".csv";
  CHECK(csvs == 3);
}

TEST_CASE("confusion argument errors") {
  const auto& r = disjoint_run();
  CHECK_THROWS(confusion(r.systems, {r.fx.clusters[0]}, 0.9));
}
