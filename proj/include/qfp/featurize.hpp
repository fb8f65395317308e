#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "qfp/matrix.hpp"
#include "qfp/parse_tree.hpp"

namespace qfp {

// n labels joined with the symbol delimiter.
struct Symbol {
  std::string text;
  std::size_t n = 0;

  bool operator==(const Symbol&) const = default;
};

// Windows start at offset, offset + stride, ... The default (n, 1, 0) is an
// overlapping sliding window; stride 2 with offset 0/1 gives the even/odd
// skipping variants.
struct GramSpec {
  std::size_t n = 3;
  std::size_t stride = 1;
  std::size_t offset = 0;

  bool operator==(const GramSpec&) const = default;
};

// Trigrams and 4-grams with maximal overlap.
std::vector<GramSpec> default_gram_specs();

std::vector<Symbol> ngrams(const LabelSequence& seq, std::size_t n, std::size_t stride,
                           std::size_t offset = 0);

// Union over all specs, deduplicated, in first-appearance order.
std::vector<Symbol> symbolize(const LabelSequence& seq, const std::vector<GramSpec>& specs);

class SymbolVocabulary {
 public:
  SymbolVocabulary() = default;
  explicit SymbolVocabulary(std::vector<Symbol> symbols);

  // Union of the sets in iteration order. Throws DataError if every set is empty.
  static SymbolVocabulary build(const std::vector<std::vector<Symbol>>& symbol_sets);

  std::size_t size() const noexcept { return symbols_.size(); }
  bool empty() const noexcept { return symbols_.empty(); }
  const std::vector<Symbol>& symbols() const noexcept { return symbols_; }
  const Symbol& operator[](std::size_t k) const { return symbols_[k]; }

  // Position of the symbol text, or -1 when absent.
  std::ptrdiff_t index_of(const std::string& text) const;

  // FNV-1a over the ordered symbol texts.
  std::uint64_t hash() const;

  bool operator==(const SymbolVocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::vector<Symbol> symbols_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Vectorized {
  std::vector<double> weights;
  std::size_t oov_count = 0;
};

// Indicator vector over the vocabulary (tau = 1). Out-of-vocabulary symbols are counted.
Vectorized vectorize(const std::vector<Symbol>& symbols, const SymbolVocabulary& vocab);

// Everything needed to turn a bracketed parse into symbols.
struct FeaturizerConfig {
  TraversalOptions traversal;
  std::vector<GramSpec> specs = default_gram_specs();

  bool operator==(const FeaturizerConfig& o) const {
    return traversal.include_terminals == o.traversal.include_terminals &&
           traversal.strip_annotations == o.traversal.strip_annotations && specs == o.specs;
  }
};

// parse -> BFS labels -> symbols. Rejects labels containing the delimiter.
std::vector<Symbol> symbols_for_parse(const std::string& parse, const FeaturizerConfig& cfg);

struct FeatureMatrix {
  SymbolVocabulary vocab;
  std::vector<std::string> ids;
  Matrix values;  // rows = ids.size(), cols = vocab.size(), entries 0/1
  std::vector<std::size_t> oov_counts;

  bool operator==(const FeatureMatrix&) const = default;
};

// Builds the vocabulary from the given parses and vectorizes each of them.
FeatureMatrix featurize_parses(const std::vector<std::string>& ids,
                               const std::vector<std::string>& parses,
                               const FeaturizerConfig& cfg);

// Vocabulary file: one symbol per line, in order.
void save_vocabulary(const SymbolVocabulary& vocab, const std::filesystem::path& path);
SymbolVocabulary load_vocabulary(const std::filesystem::path& path);

// Binary: magic, version, d, n_rows, vocab hash, ids, row-major indicator
// bytes, checksum. The vocabulary is written alongside as "<path>.vocab".
void save_feature_matrix(const FeatureMatrix& fm, const std::filesystem::path& path);
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);

}  // namespace qfp
