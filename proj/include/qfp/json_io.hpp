#pragma once

#include <json.hpp>

#include "qfp/autoencoder.hpp"
#include "qfp/featurize.hpp"

namespace qfp {

void to_json(nlohmann::json& j, const GramSpec& s);
void from_json(const nlohmann::json& j, GramSpec& s);
void to_json(nlohmann::json& j, const FeaturizerConfig& c);
void from_json(const nlohmann::json& j, FeaturizerConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace qfp
