#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qfp/autoencoder.hpp"
#include "qfp/cluster.hpp"
#include "qfp/featurize.hpp"
#include "qfp/synthetic.hpp"

namespace qfp {

struct PipelinePaths {
  std::filesystem::path squad;    // SQuAD v1.1 document
  std::filesystem::path parses;   // JSONL {id, parse}
  std::filesystem::path work_dir = "qfp-out";
};

struct PipelineConfig {
  PipelinePaths paths;
  std::vector<std::string> topics;  // empty keeps every article
  FeaturizerConfig featurizer;
  std::size_t k = 6;
  std::size_t kd_leaf_capacity = 32;
  KMeansOptions kmeans;
  std::size_t per_cluster = 40;
  TrainConfig train;
  double threshold = 0.9;
  std::vector<double> sweep = {0.5, 0.7, 0.9};
  double low_recall_floor = 0.5;
  std::size_t max_iters = 20;
  std::uint64_t seed = 7;
  std::size_t jobs = 1;
};

// Relative paths in the file are resolved against its directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);
void validate_pipeline_config(const PipelineConfig& cfg);

// Stage names in execution order.
const std::vector<std::string_view>& pipeline_stages();

// Runs one stage; its upstream artifacts must already exist in the work directory.
void run_stage(std::string_view stage, const PipelineConfig& cfg);
void run_pipeline(const PipelineConfig& cfg);

// Writes a fixture as pipeline inputs: squad.json (one article per topic),
// parses.jsonl and a config.json pointing at both. Returns the config path.
std::filesystem::path write_fixture_inputs(const Fixture& fixture, const std::filesystem::path& dir,
                                           const PipelineConfig& base);

// Files written by the report stage, relative to the work directory.
const std::vector<std::filesystem::path>& report_files();

}  // namespace qfp
