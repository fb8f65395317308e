#include "qfp/parse_tree.hpp"

#include <cctype>
#include <deque>

#include "qfp/error.hpp"

namespace qfp {

std::size_t ParseTree::node_count() const {
  std::size_t n = 1;
  for (const auto& c : children) n += c.node_count();
  return n;
}

std::size_t ParseTree::leaf_count() const {
  if (is_leaf()) return 1;
  std::size_t n = 0;
  for (const auto& c : children) n += c.leaf_count();
  return n;
}

namespace {

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}

  ParseTree read_root() {
    skip_ws();
    if (pos_ == s_.size()) throw ParseError("empty tree string", pos_);
    if (s_[pos_] != '(') throw ParseError("expected '('", pos_);
    ParseTree root = read_node(/*outermost=*/true);
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("trailing input after tree", pos_);
    return root;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string read_atom() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '(' && s_[pos_] != ')' &&
           !std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    std::string atom(s_.substr(start, pos_ - start));
    if (atom.find(kSymbolDelimiter) != std::string::npos)
      throw ParseError("label contains the reserved symbol delimiter", start);
    return atom;
  }

  // Positioned on '('.
  ParseTree read_node(bool outermost) {
    const std::size_t open = pos_;
    ++pos_;
    skip_ws();
    ParseTree node;
    if (pos_ < s_.size() && s_[pos_] != '(' && s_[pos_] != ')') node.label = read_atom();

    for (;;) {
      skip_ws();
      if (pos_ == s_.size()) throw ParseError("missing ')' for '(' opened at " + std::to_string(open), pos_);
      const char c = s_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      if (c == '(') {
        node.children.push_back(read_node(false));
      } else {
        node.children.push_back(ParseTree{read_atom(), {}});
      }
    }

    if (node.children.empty()) throw ParseError("constituent without children", open);
    if (node.label.empty()) {
      // "( (S ...) )" wrapper around the real root.
      if (outermost && node.children.size() == 1 && !node.children.front().is_leaf())
        return std::move(node.children.front());
      throw ParseError("constituent without a label", open);
    }
    return node;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

void print_into(const ParseTree& t, std::string& out) {
  if (t.is_leaf()) {
    out += t.label;
    return;
  }
  out += '(';
  out += t.label;
  for (const auto& c : t.children) {
    out += ' ';
    print_into(c, out);
  }
  out += ')';
}

}  // namespace

ParseTree parse_bracketed(std::string_view s) { return Reader(s).read_root(); }

std::string print_bracketed(const ParseTree& tree) {
  std::string out;
  print_into(tree, out);
  return out;
}

std::string strip_annotation(std::string_view label) {
  // -NONE-, -LRB- and friends are labels in their own right.
  if (label.empty() || label.front() == '-') return std::string(label);
  const auto cut = label.find_first_of("-=");
  return std::string(label.substr(0, cut));
}

LabelSequence bfs_labels(const ParseTree& tree, const TraversalOptions& opts) {
  LabelSequence out;
  std::deque<const ParseTree*> queue{&tree};
  while (!queue.empty()) {
    const ParseTree* node = queue.front();
    queue.pop_front();
    if (node->is_leaf()) {
      if (opts.include_terminals) out.push_back(node->label);
      continue;
    }
    out.push_back(opts.strip_annotations ? strip_annotation(node->label) : node->label);
    for (const auto& c : node->children) queue.push_back(&c);
  }
  return out;
}

}  // namespace qfp
