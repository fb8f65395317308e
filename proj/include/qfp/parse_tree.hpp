#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qfp {

// A constituency tree node. Nodes without children are terminal word tokens.
struct ParseTree {
  std::string label;
  std::vector<ParseTree> children;

  bool is_leaf() const noexcept { return children.empty(); }
  std::size_t node_count() const;
  std::size_t leaf_count() const;

  bool operator==(const ParseTree&) const = default;
};

using LabelSequence = std::vector<std::string>;

struct TraversalOptions {
  bool include_terminals = false;
  // Drop PTB functional annotations: "NP-SBJ" -> "NP", "NP=2" -> "NP".
  bool strip_annotations = false;
};

// Separator used to join labels into n-gram symbols (U+00B7, UTF-8).
inline constexpr std::string_view kSymbolDelimiter = "\xC2\xB7";

// Reads one PTB-style bracketed tree. A label-less outer wrapper around a
// single tree, as in "( (S ...) )", is unwrapped. Throws ParseError.
ParseTree parse_bracketed(std::string_view s);

// Whitespace-normalized bracketing: "(SBARQ (WHNP (WP What)) (SQ (VBZ is)))".
std::string print_bracketed(const ParseTree& tree);

// Level-order labels, left-to-right within each level.
LabelSequence bfs_labels(const ParseTree& tree, const TraversalOptions& opts = {});

std::string strip_annotation(std::string_view label);

}  // namespace qfp
