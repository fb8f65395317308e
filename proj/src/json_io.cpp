#include "qfp/json_io.hpp"

namespace qfp {

using nlohmann::json;

void to_json(json& j, const GramSpec& s) { j = json{{"n", s.n}, {"stride", s.stride}, {"offset", s.offset}}; }

void from_json(const json& j, GramSpec& s) {
  s.n = j.at("n").get<std::size_t>();
  s.stride = j.value("stride", std::size_t{1});
  s.offset = j.value("offset", std::size_t{0});
}

void to_json(json& j, const FeaturizerConfig& c) {
  j = json{{"include_terminals", c.traversal.include_terminals},
           {"strip_annotations", c.traversal.strip_annotations},
           {"specs", c.specs}};
}

void from_json(const json& j, FeaturizerConfig& c) {
  c.traversal.include_terminals = j.value("include_terminals", false);
  c.traversal.strip_annotations = j.value("strip_annotations", false);
  if (j.contains("specs")) c.specs = j.at("specs").get<std::vector<GramSpec>>();
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},
           {"learning_rate", c.adam.learning_rate},
           {"beta1", c.adam.beta1},
           {"beta2", c.adam.beta2},
           {"epsilon", c.adam.epsilon},
           {"batch_size", c.batch_size},
           {"shuffle_seed", c.shuffle_seed}};
}

void from_json(const json& j, TrainConfig& c) {
  const TrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.adam.learning_rate = j.value("learning_rate", d.adam.learning_rate);
  c.adam.beta1 = j.value("beta1", d.adam.beta1);
  c.adam.beta2 = j.value("beta2", d.adam.beta2);
  c.adam.epsilon = j.value("epsilon", d.adam.epsilon);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.shuffle_seed = j.value("shuffle_seed", d.shuffle_seed);
}

}  // namespace qfp
