#include <doctest.h>

#include <json.hpp>

#include "qfp/corpus.hpp"
#include "qfp/error.hpp"
#include "support.hpp"

using namespace qfp;
using nlohmann::json;

namespace {

json article(const std::string& title, const std::vector<std::string>& questions) {
  json qas = json::array();
  for (std::size_t i = 0; i < questions.size(); ++i)
    qas.push_back({{"id", title + "-" + std::to_string(i)}, {"question", questions[i]}, {"answers", json::array()}});
  return {{"title", title}, {"paragraphs", {{{"context", "..."}, {"qas", qas}}}}};
}

std::string squad(const std::vector<json>& articles) { return json{{"version", "1.1"}, {"data", articles}}.dump(); }

Corpus three_records() {
  Corpus c;
  c.source = "test";
  c.records = {{"a", "What is it?", "", "T"}, {"b", "Who was he?", "", "T"}, {"c", "Where?", "", std::nullopt}};
  return c;
}

}  // namespace

TEST_CASE("extract_squad_questions keeps document order and titles") {
  const auto c = extract_squad_questions(squad({article("Soccer", {"q0", "q1"}), article("Physics", {"q2"})}));
  REQUIRE(c.records.size() == 3);
  CHECK(c.records[0].id == "Soccer-0");
  CHECK(c.records[2].text == "q2");
  CHECK(c.records[2].topic == "Physics");
  CHECK(c.records[0].parse.empty());
}

TEST_CASE("minimal document gives one record") {
  const auto c = extract_squad_questions(squad({article("Only", {"Why?"})}));
  CHECK(c.records.size() == 1);
}

TEST_CASE("topic filter over a 3+2 fixture") {
  const std::string doc = squad({article("Soccer", {"a", "b", "c"}), article("Chemistry", {"d", "e"})});
  const auto c = extract_squad_questions(doc, {"Soccer"});
  CHECK(c.records.size() == 3);
  for (const auto& r : c.records) CHECK(r.topic == "Soccer");
}

TEST_CASE("ingestion errors") {
  SUBCASE("malformed JSON") {
    CHECK_THROWS_WITH_AS(extract_squad_questions("{\"data\": [}"), doctest::Contains("malformed JSON"), DataError);
  }
  SUBCASE("error names the path of a bad field") {
    json doc = json::parse(squad({article("A", {"x"})}));
    doc["data"][0]["paragraphs"][0]["qas"][0].erase("question");
    CHECK_THROWS_WITH_AS(extract_squad_questions(doc.dump()), doctest::Contains("/data/0/paragraphs/0/qas/0"),
                         DataError);
  }
  SUBCASE("zero questions") {
    CHECK_THROWS_WITH_AS(extract_squad_questions(squad({article("A", {})})), doctest::Contains("empty corpus"),
                         DataError);
  }
  SUBCASE("filter removing everything") {
    CHECK_THROWS_AS(extract_squad_questions(squad({article("A", {"x"})}), {"B"}), DataError);
  }
}

TEST_CASE("extraction is deterministic") {
  const std::string doc = squad({article("A", {"x", "y"}), article("B", {"z"})});
  CHECK(extract_squad_questions(doc) == extract_squad_questions(doc));
}

TEST_CASE("attach_parses") {
  const Corpus c = three_records();
  SUBCASE("full join") {
    const auto out = attach_parses(c, {{"a", "(X a)"}, {"b", "(Y b)"}, {"c", "(Z c)"}});
    CHECK(out.records[1].parse == "(Y b)");
    for (const auto& r : out.records) CHECK_FALSE(r.parse.empty());
  }
  SUBCASE("missing id is listed") {
    CHECK_THROWS_WITH_AS(attach_parses(c, {{"a", "(X a)"}, {"b", "(Y b)"}}),
                         doctest::Contains("1 record(s) without a parse: c"), DataError);
  }
  SUBCASE("unbalanced parse names the id") {
    CHECK_THROWS_WITH_AS(attach_parses(c, {{"a", "(X a)"}, {"b", "(SBARQ (WHNP (WP What))"}, {"c", "(Z c)"}}),
                         doctest::Contains("id b"), DataError);
  }
}

TEST_CASE("balanced_parentheses") {
  CHECK(balanced_parentheses("(A (B c))"));
  CHECK_FALSE(balanced_parentheses("(A (B c)"));
  CHECK_FALSE(balanced_parentheses(")("));
}

TEST_CASE("validate_ids rejects duplicates and empties") {
  Corpus c = three_records();
  CHECK_NOTHROW(validate_ids(c));
  c.records[2].id = "a";
  CHECK_THROWS_AS(validate_ids(c), DataError);
  c.records[2].id = "";
  CHECK_THROWS_AS(validate_ids(c), DataError);
}

TEST_CASE("corpus save/load round trip is byte-stable") {
  TempDir dir;
  Corpus c = attach_parses(three_records(), {{"a", "(X a)"}, {"b", "(Y \"quoted\")"}, {"c", "(Z ·)"}});
  c.records[0].text = "Unicode \xC3\xA9t\xC3\xA9 and \"quotes\"";
  save_corpus(c, dir / "one.jsonl");
  const Corpus loaded = load_corpus(dir / "one.jsonl");
  CHECK(loaded == c);
  save_corpus(loaded, dir / "two.jsonl");
  CHECK(read_text_file(dir / "one.jsonl") == read_text_file(dir / "two.jsonl"));
}

TEST_CASE("load_corpus rejects foreign files") {
  TempDir dir;
  write_text_file(dir / "bad.jsonl", "{\"id\":\"a\"}\n");
  CHECK_THROWS_AS(load_corpus(dir / "bad.jsonl"), FormatError);
  CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl"), DataError);
}

TEST_CASE("parse map round trip") {
  TempDir dir;
  const ParseMap m{{"x", "(A b)"}, {"y", "(C (D e))"}};
  save_parse_map(m, dir / "p.jsonl");
  CHECK(load_parse_map(dir / "p.jsonl") == m);
}
