#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "qfp/binary_io.hpp"
#include "qfp/corpus.hpp"
#include "qfp/error.hpp"
#include "qfp/featurize.hpp"
#include "qfp/rng.hpp"
#include "support.hpp"

using namespace qfp;

namespace {

const std::string D = std::string(kSymbolDelimiter);

std::string join(std::initializer_list<const char*> parts) {
  std::string s;
  for (const char* p : parts) s += (s.empty() ? "" : D) + p;
  return s;
}

std::vector<std::string> texts(const std::vector<Symbol>& symbols) {
  std::vector<std::string> out;
  for (const auto& s : symbols) out.push_back(s.text);
  return out;
}

std::vector<Symbol> syms(std::initializer_list<const char*> names) {
  std::vector<Symbol> out;
  for (const char* n : names) out.push_back({n, 1});
  return out;
}

// Every start index checked independently against the window rule.
std::vector<std::string> brute_force_ngrams(const LabelSequence& seq, std::size_t n, std::size_t stride,
                                            std::size_t offset) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i < offset || (i - offset) % stride != 0 || i + n > seq.size()) continue;
    std::string s;
    for (std::size_t j = 0; j < n; ++j) s += (j ? D : "") + seq[i + j];
    out.push_back(s);
  }
  return out;
}

LabelSequence random_sequence(Rng& rng) {
  static const char* alphabet[] = {"A", "B", "C", "NP", "VP", "WHNP"};
  LabelSequence seq(rng.index(15));
  for (auto& l : seq) l = alphabet[rng.index(6)];
  return seq;
}

}  // namespace

TEST_CASE("ngrams examples") {
  CHECK(texts(ngrams({"A", "B", "C", "D"}, 3, 1)) == std::vector<std::string>{join({"A", "B", "C"}), join({"B", "C", "D"})});
  CHECK(ngrams({"A", "B"}, 3, 1).empty());
  CHECK(texts(ngrams({"A", "B", "C", "D", "E"}, 4, 1)) ==
        std::vector<std::string>{join({"A", "B", "C", "D"}), join({"B", "C", "D", "E"})});
  CHECK(texts(ngrams({"A", "B", "C", "D", "E"}, 2, 2, 1)) ==
        std::vector<std::string>{join({"B", "C"}), join({"D", "E"})});
  for (const auto& s : ngrams({"A", "B", "C", "D"}, 3, 1)) CHECK(s.n == 3);
}

TEST_CASE("property: ngrams equal a brute-force enumerator on 1000 random sequences") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const LabelSequence seq = random_sequence(rng);
    const std::size_t n = 1 + rng.index(5);
    const std::size_t stride = 1 + rng.index(3);
    const std::size_t offset = rng.index(3);
    const auto got = ngrams(seq, n, stride, offset);
    REQUIRE(texts(got) == brute_force_ngrams(seq, n, stride, offset));
    if (offset == 0) {
      const std::size_t expected = seq.size() < n ? 0 : (seq.size() - n) / stride + 1;
      CHECK(got.size() == expected);
    }
  }
}

TEST_CASE("symbolize examples") {
  const auto specs = default_gram_specs();
  CHECK(texts(symbolize({"A", "B", "C", "D"}, specs)) ==
        std::vector<std::string>{join({"A", "B", "C"}), join({"B", "C", "D"}), join({"A", "B", "C", "D"})});
  CHECK(symbolize({"A"}, {{3, 1, 0}}).empty());
  CHECK(texts(symbolize({"A", "B", "A", "B", "A"}, {{3, 1, 0}})) ==
        std::vector<std::string>{join({"A", "B", "A"}), join({"B", "A", "B"})});
}

TEST_CASE("vocabulary build") {
  const auto v = SymbolVocabulary::build({syms({"a", "b"}), syms({"b", "c"})});
  CHECK(texts(v.symbols()) == std::vector<std::string>{"a", "b", "c"});
  CHECK(v.size() == 3);
  for (std::size_t k = 0; k < v.size(); ++k) CHECK(v.index_of(v[k].text) == static_cast<std::ptrdiff_t>(k));
  CHECK(v.index_of("zzz") == -1);
  CHECK(SymbolVocabulary::build({syms({"a"})}).size() == 1);
  CHECK_THROWS_AS(SymbolVocabulary::build({{}, {}}), DataError);
}

TEST_CASE("vectorize examples") {
  const auto v = SymbolVocabulary::build({syms({"a", "b", "c"})});
  auto r = vectorize(syms({"c", "a"}), v);
  CHECK(r.weights == std::vector<double>{1, 0, 1});
  CHECK(r.oov_count == 0);
  r = vectorize({}, v);
  CHECK(r.weights == std::vector<double>{0, 0, 0});
  CHECK(r.oov_count == 0);
  r = vectorize(syms({"a", "z"}), v);
  CHECK(r.weights == std::vector<double>{1, 0, 0});
  CHECK(r.oov_count == 1);
  CHECK(vectorize(syms({"a", "a", "c"}), v).weights == vectorize(syms({"a", "c"}), v).weights);
}

TEST_CASE("property: vectorize matches an index-lookup oracle and survives corpus reordering") {
  Rng rng(99);
  const auto specs = default_gram_specs();
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::vector<Symbol>> sets(1 + rng.index(6));
    for (auto& s : sets) s = symbolize(random_sequence(rng), specs);
    if (std::all_of(sets.begin(), sets.end(), [](const auto& s) { return s.empty(); })) continue;
    const auto vocab = SymbolVocabulary::build(sets);
    const auto query = symbolize(random_sequence(rng), specs);

    std::vector<double> oracle(vocab.size(), 0.0);
    std::size_t oov = 0;
    for (const auto& s : query) {
      bool found = false;
      for (std::size_t k = 0; k < vocab.size(); ++k)
        if (vocab[k].text == s.text) oracle[k] = 1.0, found = true;
      oov += !found;
    }
    const auto got = vectorize(query, vocab);
    REQUIRE(got.weights == oracle);
    REQUIRE(got.oov_count == oov);

    auto shuffled = sets;
    rng.shuffle(std::span(shuffled));
    const auto vocab2 = SymbolVocabulary::build(shuffled);
    const auto got2 = vectorize(query, vocab2);
    std::set<std::string> named1, named2;
    for (std::size_t k = 0; k < vocab.size(); ++k)
      if (got.weights[k] != 0.0) named1.insert(vocab[k].text);
    for (std::size_t k = 0; k < vocab2.size(); ++k)
      if (got2.weights[k] != 0.0) named2.insert(vocab2[k].text);
    CHECK(named1 == named2);
  }
}

TEST_CASE("symbols_for_parse uses the traversal options") {
  FeaturizerConfig cfg;
  const auto s = symbols_for_parse("(SBARQ (WHNP (WP What)) (SQ (VBZ is)))", cfg);
  CHECK(texts(s) == std::vector<std::string>{join({"SBARQ", "WHNP", "SQ"}), join({"WHNP", "SQ", "WP"}),
                                             join({"SQ", "WP", "VBZ"}), join({"SBARQ", "WHNP", "SQ", "WP"}),
                                             join({"WHNP", "SQ", "WP", "VBZ"})});
  CHECK_THROWS_AS(symbols_for_parse("(A (B c)", cfg), ParseError);
}

TEST_CASE("featurize_parses builds an indicator matrix") {
  const auto fm = featurize_parses({"x", "y"}, {"(S (NP (NN a)) (VP (VB b)))", "(S (NP (NN a)) (ADJP (JJ c)))"}, {});
  CHECK(fm.values.rows == 2);
  CHECK(fm.values.cols == fm.vocab.size());
  for (double v : fm.values.data) CHECK((v == 0.0 || v == 1.0));
  CHECK(fm.oov_counts == std::vector<std::size_t>{0, 0});
}

TEST_CASE("vocabulary and feature matrix persistence") {
  TempDir dir;
  const auto fm = featurize_parses({"x", "y", "z"},
                                   {"(S (NP (NN a)) (VP (VB b)))", "(S (NP (NN a)) (ADJP (JJ c)))",
                                    "(SBARQ (WHNP (WP What)) (SQ (VBZ is) (NP (DT the) (NN x))))"},
                                   {});
  save_vocabulary(fm.vocab, dir / "v.txt");
  const auto v = load_vocabulary(dir / "v.txt");
  CHECK(v == fm.vocab);
  for (std::size_t k = 0; k < v.size(); ++k) CHECK(v[k].n == fm.vocab[k].n);

  save_feature_matrix(fm, dir / "f.bin");
  CHECK(load_feature_matrix(dir / "f.bin") == fm);

  SUBCASE("wrong magic") {
    std::string bytes = read_text_file(dir / "f.bin");
    bytes[0] = 'X';
    write_text_file(dir / "f.bin", bytes);
    CHECK_THROWS_WITH_AS(load_feature_matrix(dir / "f.bin"), doctest::Contains("magic"), FormatError);
  }
  SUBCASE("flipped payload byte") {
    std::string bytes = read_text_file(dir / "f.bin");
    bytes[bytes.size() / 2] ^= 0x01;
    write_text_file(dir / "f.bin", bytes);
    CHECK_THROWS_AS(load_feature_matrix(dir / "f.bin"), FormatError);
  }
  SUBCASE("truncated") {
    std::string bytes = read_text_file(dir / "f.bin");
    write_text_file(dir / "f.bin", bytes.substr(0, bytes.size() - 9));
    CHECK_THROWS_AS(load_feature_matrix(dir / "f.bin"), FormatError);
  }
  SUBCASE("vocabulary edited behind the matrix") {
    write_text_file(dir / "f.bin.vocab", "A" + D + "B" + D + "C\n");
    CHECK_THROWS_AS(load_feature_matrix(dir / "f.bin"), FormatError);
  }
}

TEST_CASE("binary container version check") {
  TempDir dir;
  BinaryWriter w("TEST", 2);
  w.u64(7);
  w.write_to(dir / "t.bin");
  CHECK_THROWS_AS(BinaryReader(dir / "t.bin", "TEST", 1), FormatError);
  BinaryReader r(dir / "t.bin", "TEST", 2);
  CHECK(r.u64() == 7);
  CHECK_NOTHROW(r.expect_end());
}
