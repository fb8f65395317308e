#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qfp {

struct QuestionRecord {
  std::string id;
  std::string text;
  std::string parse;  // PTB bracketing; empty until parses are attached
  std::optional<std::string> topic;

  bool operator==(const QuestionRecord&) const = default;
};

struct Corpus {
  std::vector<QuestionRecord> records;
  std::string source;

  bool operator==(const Corpus&) const = default;
};

using ParseMap = std::map<std::string, std::string>;

// Reads a SQuAD v1.1 document (data -> paragraphs -> qas -> question) in document order.
// An empty topic_filter keeps every article.
Corpus extract_squad_questions(std::string_view squad_json,
                               const std::vector<std::string>& topic_filter = {},
                               std::string source = "squad");

// Joins externally produced parses onto the corpus by id.
Corpus attach_parses(const Corpus& corpus, const ParseMap& parses);

// Throws DataError on empty or duplicate ids.
void validate_ids(const Corpus& corpus);

bool balanced_parentheses(std::string_view s);

// JSONL: a header line {"format":"qfp-corpus","version":1,"source":...}
// followed by one {id, text, parse, topic} object per record.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

// JSONL of {id, parse}.
ParseMap load_parse_map(const std::filesystem::path& path);
void save_parse_map(const ParseMap& parses, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace qfp
