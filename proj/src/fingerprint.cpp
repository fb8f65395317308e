#include "qfp/fingerprint.hpp"

#include <algorithm>
#include <numeric>

#include "qfp/binary_io.hpp"
#include "qfp/error.hpp"
#include "qfp/json_io.hpp"

namespace qfp {

using nlohmann::json;

std::vector<std::size_t> largest_indices(std::span<const double> y, std::size_t n) {
  n = std::min(n, y.size());
  std::vector<std::size_t> idx(y.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) { return y[a] > y[b] || (y[a] == y[b] && a < b); });
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double sim(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw DataError("sim: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) active.push_back(i);
  if (active.empty()) return 0.0;

  const auto top = largest_indices(y, active.size());
  std::vector<std::size_t> both;
  std::set_intersection(active.begin(), active.end(), top.begin(), top.end(), std::back_inserter(both));
  const std::size_t inter = both.size();
  const std::size_t uni = active.size() + top.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

std::vector<Symbol> question_symbols(const QuestionRecord& q, const FeaturizerConfig& cfg) {
  if (q.parse.empty()) throw DataError("question " + q.id + " has no parse");
  try {
    return symbols_for_parse(q.parse, cfg);
  } catch (const ParseError& e) {
    throw DataError("question " + q.id + ": " + e.what());
  }
}

}  // namespace

FingerprintSystem train_fingerprint(std::size_t cluster_id, const std::vector<QuestionRecord>& questions,
                                    const FingerprintOptions& opts) {
  if (questions.empty())
    throw DataError("cluster " + std::to_string(cluster_id) + ": no training questions");
  if (opts.threshold < 0.0 || opts.threshold > 1.0) throw ConfigError("threshold must lie in [0, 1]");

  std::vector<std::vector<Symbol>> sets;
  for (const auto& q : questions) {
    auto s = question_symbols(q, opts.featurizer);
    if (!s.empty()) sets.push_back(std::move(s));
  }
  if (sets.empty())
    throw DataError("cluster " + std::to_string(cluster_id) + ": no training question yields any symbol");

  FingerprintSystem sys;
  sys.cluster_id = cluster_id;
  sys.featurizer = opts.featurizer;
  sys.threshold = opts.threshold;
  sys.vocab = SymbolVocabulary::build(sets);

  const std::size_t d = sys.vocab.size();
  Matrix data(sets.size(), d);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto v = vectorize(sets[i], sys.vocab);
    std::copy(v.weights.begin(), v.weights.end(), data.row(i).begin());
  }
  sys.model = Autoencoder(d, default_architecture(d), opts.init_seed);
  sys.loss_trace = train(sys.model, data, opts.train).loss_trace;
  return sys;
}

DetectionResult detect(const FingerprintSystem& system, const QuestionRecord& question) {
  const auto v = vectorize(question_symbols(question, system.featurizer), system.vocab);
  DetectionResult r;
  r.id = question.id;
  r.oov_count = v.oov_count;
  r.sim = sim(v.weights, system.model.forward(v.weights));
  r.detected = r.sim >= system.threshold;
  return r;
}

BatchDetection detect_batch(const FingerprintSystem& system, const std::vector<QuestionRecord>& questions) {
  BatchDetection out;
  out.results.reserve(questions.size());
  for (const auto& q : questions) {
    out.results.push_back(detect(system, q));
    if (out.results.back().detected) out.detected.push_back(q);
  }
  return out;
}

void save_fingerprint(const FingerprintSystem& system, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_autoencoder(system.model, dir / "model.bin");
  save_vocabulary(system.vocab, dir / "vocab.txt");
  save_loss_trace_csv(system.loss_trace, dir / "loss.csv");
  const json meta{{"format", "qfp-fingerprint"},
                  {"version", 1},
                  {"cluster_id", system.cluster_id},
                  {"threshold", system.threshold},
                  {"featurizer", system.featurizer},
                  {"vocab_size", system.vocab.size()},
                  {"vocab_hash", hex64(system.vocab.hash())},
                  {"loss_trace", system.loss_trace}};
  write_text_file(dir / "system.json", meta.dump(2) + "\n");
}

FingerprintSystem load_fingerprint(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "system.json"))
    throw DataError("no fingerprint bundle at " + dir.string());
  FingerprintSystem sys;
  try {
    const json meta = json::parse(read_text_file(dir / "system.json"));
    if (meta.value("format", "") != "qfp-fingerprint" || meta.value("version", 0) != 1)
      throw FormatError(dir.string() + ": not a fingerprint bundle");
    sys.cluster_id = meta.at("cluster_id").get<std::size_t>();
    sys.threshold = meta.at("threshold").get<double>();
    sys.featurizer = meta.at("featurizer").get<FeaturizerConfig>();
    sys.loss_trace = meta.value("loss_trace", std::vector<double>{});
    sys.vocab = load_vocabulary(dir / "vocab.txt");
    if (hex64(sys.vocab.hash()) != meta.at("vocab_hash").get<std::string>())
      throw FormatError(dir.string() + ": vocabulary hash mismatch");
  } catch (const json::exception& e) {
    throw FormatError(dir.string() + "/system.json: " + e.what());
  }
  sys.model = load_autoencoder(dir / "model.bin");
  if (sys.model.input_dim() != sys.vocab.size())
    throw FormatError(dir.string() + ": model input dimension does not match vocabulary");
  return sys;
}

}  // namespace qfp
