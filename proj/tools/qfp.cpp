// qfp: question fingerprinting pipeline driver.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qfp/error.hpp"
#include "qfp/pipeline.hpp"
#include "qfp/synthetic.hpp"
#include "qfp/version.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string work_dir, squad, parses;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs, k, per_cluster, max_iters, epochs, batch_size;
  std::optional<double> threshold;
};

qfp::PipelineConfig resolve_config(const Overrides& o) {
  qfp::PipelineConfig cfg = o.config.empty() ? qfp::PipelineConfig{} : qfp::load_pipeline_config(o.config);
  if (!o.work_dir.empty()) cfg.paths.work_dir = o.work_dir;
  if (!o.squad.empty()) cfg.paths.squad = o.squad;
  if (!o.parses.empty()) cfg.paths.parses = o.parses;
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.k) cfg.k = *o.k;
  if (o.per_cluster) cfg.per_cluster = *o.per_cluster;
  if (o.max_iters) cfg.max_iters = *o.max_iters;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.threshold) cfg.threshold = *o.threshold;
  qfp::validate_pipeline_config(cfg);
  return cfg;
}

int exit_code(qfp::ErrorKind kind) {
  switch (kind) {
    case qfp::ErrorKind::config: return 2;
    case qfp::ErrorKind::data: return 3;
    case qfp::ErrorKind::divergence: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Question fingerprinting: cluster questions by parse structure and train one auto-encoder per cluster"};
  app.set_version_flag("--version", qfp::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("-c,--config", o.config, "Pipeline config (JSON)");
  app.add_option("-w,--work-dir", o.work_dir, "Directory for stage artifacts");
  app.add_option("--squad", o.squad, "SQuAD v1.1 JSON document");
  app.add_option("--parses", o.parses, "JSONL of {id, parse}");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("-j,--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("-k,--clusters", o.k, "Number of clusters");
  app.add_option("--per-cluster", o.per_cluster, "Seed questions sampled per cluster");
  app.add_option("--threshold", o.threshold, "Detection threshold on SIM");
  app.add_option("--max-iters", o.max_iters, "K-fingerprints iteration cap");
  app.add_option("--epochs", o.epochs, "Training epochs");
  app.add_option("--batch-size", o.batch_size, "Mini-batch size");

  std::string stage_to_run;
  for (const auto name : qfp::pipeline_stages()) {
    auto* sub = app.add_subcommand(std::string(name), "Run the " + std::string(name) + " stage");
    sub->callback([&stage_to_run, name] { stage_to_run = name; });
  }
  app.add_subcommand("all", "Run every stage in order")->callback([&] { stage_to_run = "all"; });

  auto* synth = app.add_subcommand("synth", "Write a synthetic fixture corpus with parses and a config");
  std::string synth_out;
  qfp::FixtureConfig fixture;
  bool nested = false;
  synth->add_option("out", synth_out, "Output directory")->required();
  synth->add_option("--styles", fixture.clusters, "Number of articulation styles");
  synth->add_option("--questions", fixture.per_cluster, "Questions per style");
  synth->add_option("--variants", fixture.variants, "Templates per style");
  synth->add_option("--noise", fixture.noise, "Probability of an extra structural mutation");
  synth->add_option("--foreign-fraction", fixture.foreign_fraction, "Share of each cluster taken from other styles");
  synth->add_option("--fixture-seed", fixture.seed, "Generator seed");
  synth->add_flag("--nested", nested, "Two styles where one extends the other by a single node");
  synth->callback([&] { stage_to_run = "synth"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (stage_to_run == "synth") {
      qfp::Fixture fx;
      if (nested) {
        qfp::NestedFixtureConfig nc;
        nc.per_cluster = fixture.per_cluster;
        nc.variants = fixture.variants;
        nc.noise = fixture.noise;
        nc.seed = fixture.seed;
        fx = qfp::make_nested_fixture(nc);
      } else {
        fx = qfp::make_fixture(fixture);
      }
      const auto path = qfp::write_fixture_inputs(fx, synth_out, resolve_config(o));
      std::printf("wrote %zu questions; config at %s\n", fx.corpus.records.size(), path.string().c_str());
      return 0;
    }
    const qfp::PipelineConfig cfg = resolve_config(o);
    if (stage_to_run == "all") {
      for (const auto name : qfp::pipeline_stages()) {
        std::fprintf(stderr, "[qfp] %.*s\n", static_cast<int>(name.size()), name.data());
        qfp::run_stage(name, cfg);
      }
    } else {
      qfp::run_stage(stage_to_run, cfg);
    }
    return 0;
  } catch (const qfp::Error& e) {
    std::fprintf(stderr, "qfp: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "qfp: %s\n", e.what());
    return 1;
  }
}
