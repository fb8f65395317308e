#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

#include "qfp/corpus.hpp"
#include "qfp/error.hpp"
#include "qfp/pipeline.hpp"
#include "support.hpp"

using namespace qfp;
using nlohmann::json;

namespace {

Fixture small_fixture() {
  FixtureConfig fc;
  fc.clusters = 2;
  fc.per_cluster = 24;
  fc.foreign_fraction = 0.2;
  fc.seed = 4;
  return make_fixture(fc);
}

PipelineConfig small_config() {
  PipelineConfig c;
  c.per_cluster = 8;
  c.train.epochs = 15;
  c.max_iters = 2;
  c.kd_leaf_capacity = 8;
  return c;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(QFP_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  TempDir dir;
  write_text_file(dir / "c.json", R"({"paths": {"squad": "in/s.json", "work_dir": "w"}, "k": 4, "train": {"epochs": 7}})");
  const auto c = load_pipeline_config(dir / "c.json");
  CHECK(c.k == 4);
  CHECK(c.train.epochs == 7);
  CHECK(c.train.batch_size == 16);
  CHECK(c.paths.squad == dir.path() / "in/s.json");
  CHECK(c.paths.work_dir == dir.path() / "w");
  CHECK(c.threshold == 0.9);

  const auto round = pipeline_config_from_json(pipeline_config_to_json(c));
  CHECK(pipeline_config_to_json(round) == pipeline_config_to_json(c));

  CHECK_THROWS_WITH_AS(pipeline_config_from_json(json{{"kk", 3}}), doctest::Contains("kk"), ConfigError);
  CHECK_THROWS_AS(pipeline_config_from_json(json{{"train", {{"epoch", 3}}}}), ConfigError);
  CHECK_THROWS_AS(pipeline_config_from_json(json{{"k", "six"}}), ConfigError);
  CHECK_THROWS_AS(pipeline_config_from_json(json{{"k", 1}}), ConfigError);
  CHECK_THROWS_AS(pipeline_config_from_json(json{{"threshold", 1.5}}), ConfigError);
  CHECK_THROWS_AS(load_pipeline_config(dir / "missing.json"), ConfigError);
  write_text_file(dir / "broken.json", "{");
  CHECK_THROWS_AS(load_pipeline_config(dir / "broken.json"), ConfigError);
}

TEST_CASE("stage table") {
  const auto& s = pipeline_stages();
  REQUIRE(s.size() == 11);
  CHECK(s.front() == "ingest");
  CHECK(s.back() == "report");
  CHECK_THROWS_AS(run_stage("nope", small_config()), ConfigError);
}

TEST_CASE("a stage refuses to run before its upstream") {
  TempDir dir;
  const auto cfg = load_pipeline_config(write_fixture_inputs(small_fixture(), dir.path(), small_config()));
  CHECK_THROWS_WITH_AS(run_stage("detect", cfg), doctest::Contains("run train-baseline first"), ConfigError);
  CHECK_THROWS_WITH_AS(run_stage("featurize", cfg), doctest::Contains("attach-parses"), ConfigError);
}

TEST_CASE("end to end run is byte-reproducible and leaves manifests") {
  const Fixture fx = small_fixture();
  TempDir a, b;
  const auto ca = load_pipeline_config(write_fixture_inputs(fx, a.path(), small_config()));
  auto cb = load_pipeline_config(write_fixture_inputs(fx, b.path(), small_config()));
  cb.jobs = 2;  // parallelism must not leak into results
  run_pipeline(ca);
  run_pipeline(cb);

  for (const auto& f : report_files())
    CHECK(read_text_file(ca.paths.work_dir / f) == read_text_file(cb.paths.work_dir / f));
  for (const auto& stage : pipeline_stages()) {
    const auto m = ca.paths.work_dir / "manifests" / (std::string(stage) + ".json");
    REQUIRE(std::filesystem::exists(m));
    CHECK(read_text_file(m) == read_text_file(cb.paths.work_dir / "manifests" / (std::string(stage) + ".json")));
    const json j = json::parse(read_text_file(m));
    CHECK(j.at("stage") == stage);
    CHECK(j.at("outputs").size() > 0);
  }

  const json report = json::parse(read_text_file(ca.paths.work_dir / "report.json"));
  CHECK(report.at("corpus").at("questions") == fx.corpus.records.size());
  CHECK(report.at("confusion").size() == 3);
  CHECK(report.at("kfp").at("clusters").size() == 2);
  CHECK(std::filesystem::exists(ca.paths.work_dir / "confusion" / "theta-0.90.csv"));
  CHECK(std::filesystem::exists(ca.paths.work_dir / "baseline" / "cluster-00" / "model.bin"));

  // Rerunning a single stage reproduces its outputs.
  const std::string before = read_text_file(ca.paths.work_dir / "clusters.jsonl");
  run_stage("cluster", ca);
  CHECK(read_text_file(ca.paths.work_dir / "clusters.jsonl") == before);
}

TEST_CASE("cli exit codes") {
  TempDir dir;
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("no-such-command") == 2);
  CHECK(run_cli("-c " + (dir / "missing.json").string() + " ingest") == 2);

  write_text_file(dir / "s.json", "{ not json");
  write_text_file(dir / "c.json", R"({"paths": {"squad": "s.json", "parses": "p.jsonl", "work_dir": "w"}})");
  CHECK(run_cli("-c " + (dir / "c.json").string() + " ingest") == 3);

  const std::string out = (dir / "fx").string();
  CHECK(run_cli("synth " + out + " --styles 2 --questions 10") == 0);
  CHECK(std::filesystem::exists(dir / "fx" / "config.json"));
}
