#include "qfp/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qfp/error.hpp"

namespace qfp {

using nlohmann::json;

namespace {

std::string dump_line(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

const json& require(const json& node, const char* key, const std::string& where,
                    json::value_t type) {
  if (!node.is_object() || !node.contains(key))
    throw DataError("SQuAD ingestion: missing \"" + std::string(key) + "\" at " + where);
  const json& v = node.at(key);
  if (v.type() != type)
    throw DataError("SQuAD ingestion: unexpected type for " + where + "/" + key);
  return v;
}

}  // namespace

bool balanced_parentheses(std::string_view s) {
  long depth = 0;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')' && --depth < 0) return false;
  }
  return depth == 0;
}

void validate_ids(const Corpus& corpus) {
  std::set<std::string_view> seen;
  for (const auto& r : corpus.records) {
    if (r.id.empty()) throw DataError("corpus record with empty id");
    if (!seen.insert(r.id).second) throw DataError("duplicate corpus id: " + r.id);
  }
}

Corpus extract_squad_questions(std::string_view squad_json,
                               const std::vector<std::string>& topic_filter, std::string source) {
  json doc;
  try {
    doc = json::parse(squad_json);
  } catch (const json::parse_error& e) {
    throw DataError("SQuAD ingestion: malformed JSON at byte " + std::to_string(e.byte));
  }

  const std::set<std::string> keep(topic_filter.begin(), topic_filter.end());
  Corpus corpus;
  corpus.source = std::move(source);

  const json& data = require(doc, "data", "", json::value_t::array);
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string where_a = "/data/" + std::to_string(a);
    const json& article = data[a];
    const std::string title = require(article, "title", where_a, json::value_t::string);
    if (!keep.empty() && !keep.contains(title)) continue;

    const json& paragraphs = require(article, "paragraphs", where_a, json::value_t::array);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string where_p = where_a + "/paragraphs/" + std::to_string(p);
      const json& qas = require(paragraphs[p], "qas", where_p, json::value_t::array);
      for (std::size_t q = 0; q < qas.size(); ++q) {
        const std::string where_q = where_p + "/qas/" + std::to_string(q);
        QuestionRecord rec;
        rec.id = require(qas[q], "id", where_q, json::value_t::string);
        rec.text = require(qas[q], "question", where_q, json::value_t::string);
        rec.topic = title;
        corpus.records.push_back(std::move(rec));
      }
    }
  }
  if (corpus.records.empty()) throw DataError("SQuAD ingestion: no questions extracted (empty corpus)");
  validate_ids(corpus);
  return corpus;
}

Corpus attach_parses(const Corpus& corpus, const ParseMap& parses) {
  std::vector<std::string> missing;
  for (const auto& r : corpus.records)
    if (!parses.contains(r.id)) missing.push_back(r.id);
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " record(s) without a parse:";
    for (const auto& id : missing) msg += " " + id;
    throw DataError(msg);
  }

  Corpus out = corpus;
  for (auto& r : out.records) {
    r.parse = parses.at(r.id);
    if (!balanced_parentheses(r.parse)) throw DataError("unbalanced parse for id " + r.id);
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!f) throw DataError("write failed: " + path.string());
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::string out = dump_line({{"format", "qfp-corpus"}, {"version", 1}, {"source", corpus.source}});
  out += '\n';
  for (const auto& r : corpus.records) {
    json j{{"id", r.id}, {"text", r.text}, {"parse", r.parse}};
    j["topic"] = r.topic ? json(*r.topic) : json(nullptr);
    out += dump_line(j);
    out += '\n';
  }
  write_text_file(path, out);
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  Corpus corpus;
  std::size_t lineno = 0;
  try {
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty corpus file");
    ++lineno;
    const json header = json::parse(line);
    if (!header.is_object() || header.value("format", "") != "qfp-corpus")
      throw FormatError(path.string() + ": not a corpus file (bad header)");
    if (header.value("version", 0) != 1) throw FormatError(path.string() + ": unsupported corpus version");
    corpus.source = header.value("source", "");

    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = json::parse(line);
      QuestionRecord r;
      r.id = j.at("id").get<std::string>();
      r.text = j.at("text").get<std::string>();
      r.parse = j.value("parse", "");
      if (j.contains("topic") && !j["topic"].is_null()) r.topic = j["topic"].get<std::string>();
      corpus.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
  }
  validate_ids(corpus);
  return corpus;
}

ParseMap load_parse_map(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  ParseMap parses;
  std::size_t lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = json::parse(line);
      auto id = j.at("id").get<std::string>();
      if (!parses.emplace(id, j.at("parse").get<std::string>()).second)
        throw DataError(path.string() + ": duplicate parse id " + id);
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
  }
  return parses;
}

void save_parse_map(const ParseMap& parses, const std::filesystem::path& path) {
  std::string out;
  for (const auto& [id, parse] : parses) {
    out += dump_line({{"id", id}, {"parse", parse}});
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace qfp
