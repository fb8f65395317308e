#include "qfp/featurize.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "qfp/binary_io.hpp"
#include "qfp/corpus.hpp"
#include "qfp/error.hpp"

namespace qfp {

std::vector<GramSpec> default_gram_specs() { return {{3, 1, 0}, {4, 1, 0}}; }

std::vector<Symbol> ngrams(const LabelSequence& seq, std::size_t n, std::size_t stride,
                           std::size_t offset) {
  if (n == 0 || stride == 0) throw ConfigError("n-gram length and stride must be positive");
  std::vector<Symbol> out;
  for (std::size_t i = offset; i + n <= seq.size(); i += stride) {
    std::string text = seq[i];
    for (std::size_t j = i + 1; j < i + n; ++j) {
      text += kSymbolDelimiter;
      text += seq[j];
    }
    out.push_back({std::move(text), n});
  }
  return out;
}

std::vector<Symbol> symbolize(const LabelSequence& seq, const std::vector<GramSpec>& specs) {
  if (specs.empty()) throw ConfigError("at least one n-gram spec is required");
  std::vector<Symbol> out;
  std::unordered_set<std::string> seen;
  for (const auto& spec : specs)
    for (auto& sym : ngrams(seq, spec.n, spec.stride, spec.offset))
      if (seen.insert(sym.text).second) out.push_back(std::move(sym));
  return out;
}

SymbolVocabulary::SymbolVocabulary(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {
  index_.reserve(symbols_.size());
  for (std::size_t k = 0; k < symbols_.size(); ++k)
    if (!index_.emplace(symbols_[k].text, k).second)
      throw DataError("duplicate vocabulary symbol: " + symbols_[k].text);
}

SymbolVocabulary SymbolVocabulary::build(const std::vector<std::vector<Symbol>>& symbol_sets) {
  std::vector<Symbol> ordered;
  std::unordered_set<std::string> seen;
  for (const auto& set : symbol_sets)
    for (const auto& sym : set)
      if (seen.insert(sym.text).second) ordered.push_back(sym);
  if (ordered.empty()) throw DataError("empty vocabulary: no question produced any symbol");
  return SymbolVocabulary(std::move(ordered));
}

std::ptrdiff_t SymbolVocabulary::index_of(const std::string& text) const {
  const auto it = index_.find(text);
  return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

std::uint64_t SymbolVocabulary::hash() const {
  std::uint64_t h = fnv1a(std::string_view{});
  for (const auto& s : symbols_) {
    h = fnv1a(s.text, h);
    h = fnv1a(std::string_view("\n", 1), h);
  }
  return h;
}

Vectorized vectorize(const std::vector<Symbol>& symbols, const SymbolVocabulary& vocab) {
  Vectorized out{std::vector<double>(vocab.size(), 0.0), 0};
  std::unordered_set<std::string_view> oov;
  for (const auto& s : symbols) {
    const auto k = vocab.index_of(s.text);
    if (k < 0)
      oov.insert(s.text);
    else
      out.weights[static_cast<std::size_t>(k)] = 1.0;
  }
  out.oov_count = oov.size();
  return out;
}

std::vector<Symbol> symbols_for_parse(const std::string& parse, const FeaturizerConfig& cfg) {
  return symbolize(bfs_labels(parse_bracketed(parse), cfg.traversal), cfg.specs);
}

FeatureMatrix featurize_parses(const std::vector<std::string>& ids,
                               const std::vector<std::string>& parses,
                               const FeaturizerConfig& cfg) {
  if (ids.size() != parses.size()) throw DataError("featurize: ids and parses differ in length");
  std::vector<std::vector<Symbol>> sets;
  sets.reserve(parses.size());
  for (std::size_t i = 0; i < parses.size(); ++i) {
    try {
      sets.push_back(symbols_for_parse(parses[i], cfg));
    } catch (const ParseError& e) {
      throw DataError("record " + ids[i] + ": " + e.what());
    }
  }

  FeatureMatrix fm;
  fm.vocab = SymbolVocabulary::build(sets);
  fm.ids = ids;
  fm.values = Matrix(ids.size(), fm.vocab.size());
  fm.oov_counts.resize(ids.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    auto v = vectorize(sets[i], fm.vocab);
    std::copy(v.weights.begin(), v.weights.end(), fm.values.row(i).begin());
    fm.oov_counts[i] = v.oov_count;
  }
  return fm;
}

void save_vocabulary(const SymbolVocabulary& vocab, const std::filesystem::path& path) {
  std::string out;
  for (const auto& s : vocab.symbols()) {
    out += s.text;
    out += '\n';
  }
  write_text_file(path, out);
}

SymbolVocabulary load_vocabulary(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<Symbol> symbols;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t n = 1;
    for (std::size_t p = line.find(kSymbolDelimiter); p != std::string::npos;
         p = line.find(kSymbolDelimiter, p + kSymbolDelimiter.size()))
      ++n;
    symbols.push_back({line, n});
  }
  return SymbolVocabulary(std::move(symbols));
}

namespace {
constexpr std::string_view kFeatureMagic = "QFPF";
constexpr std::uint32_t kFeatureVersion = 1;
}  // namespace

void save_feature_matrix(const FeatureMatrix& fm, const std::filesystem::path& path) {
  BinaryWriter w(kFeatureMagic, kFeatureVersion);
  w.u64(fm.values.cols);
  w.u64(fm.values.rows);
  w.u64(fm.vocab.hash());
  for (std::size_t i = 0; i < fm.ids.size(); ++i) {
    w.str(fm.ids[i]);
    w.u64(fm.oov_counts[i]);
  }
  std::vector<std::uint8_t> bits(fm.values.data.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = fm.values.data[i] != 0.0 ? 1 : 0;
  w.bytes(bits);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  w.write_to(path);
  save_vocabulary(fm.vocab, path.string() + ".vocab");
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
  BinaryReader r(path, kFeatureMagic, kFeatureVersion);
  FeatureMatrix fm;
  const auto d = r.u64();
  const auto n = r.u64();
  const auto vocab_hash = r.u64();
  fm.vocab = load_vocabulary(path.string() + ".vocab");
  if (fm.vocab.size() != d || fm.vocab.hash() != vocab_hash)
    throw FormatError(path.string() + ": vocabulary file does not match feature matrix header");
  for (std::uint64_t i = 0; i < n; ++i) {
    fm.ids.push_back(r.str());
    fm.oov_counts.push_back(r.u64());
  }
  const auto bits = r.bytes(d * n);
  r.expect_end();
  fm.values = Matrix(n, d);
  for (std::size_t i = 0; i < bits.size(); ++i) fm.values.data[i] = bits[i];
  return fm;
}

}  // namespace qfp
