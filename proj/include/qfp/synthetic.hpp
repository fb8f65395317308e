#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qfp/corpus.hpp"
#include "qfp/parse_tree.hpp"

namespace qfp {

// Generator of question corpora with known articulation styles. Each style
// is a handful of template trees over a style-specific set of phrase labels
// (PTB labels carrying a style-specific functional tag); questions are
// template instances with random words and optional structural noise.
struct FixtureConfig {
  std::size_t clusters = 6;
  std::size_t per_cluster = 320;
  std::size_t variants = 3;         // templates per style
  double noise = 0.05;              // probability of one extra structural mutation
  bool shared_pos = true;           // preterminal tags shared across styles
  double foreign_fraction = 0.0;    // share of each cluster drawn from other styles
  std::size_t foreign_edits = 2;    // idiosyncratic structural edits per injected member
  std::uint64_t seed = 7;
};

struct Fixture {
  Corpus corpus;                                    // parses attached
  std::vector<std::vector<QuestionRecord>> clusters;
  // Generating style of every member of clusters[i] (differs from i for injected members).
  std::vector<std::vector<std::size_t>> origin;
};

Fixture make_fixture(const FixtureConfig& cfg);

// Two styles where every "superset" question is a "subset" question whose
// tree gains one extra trailing node, adding exactly two symbols.
struct NestedFixtureConfig {
  std::size_t per_cluster = 320;
  std::size_t variants = 3;
  double noise = 0.05;
  std::uint64_t seed = 11;
};

// clusters[0] = subset style, clusters[1] = superset style.
Fixture make_nested_fixture(const NestedFixtureConfig& cfg);

}  // namespace qfp
