#include "qfp/synthetic.hpp"

#include <array>
#include <cmath>
#include <string>

#include "qfp/rng.hpp"

namespace qfp {

namespace {

constexpr std::array<const char*, 14> kTags = {"SBJ", "TMP", "LOC", "PRD", "CLR", "DIR", "MNR",
                                               "PRP", "ADV", "EXT", "TPC", "BNF", "VOC", "HLN"};
constexpr std::array<const char*, 4> kWhPhrases = {"WHNP", "WHADVP", "WHADJP", "WHPP"};
constexpr std::array<const char*, 8> kPhrases = {"NP", "VP", "PP", "ADJP", "ADVP", "S", "SBAR", "QP"};
constexpr std::array<const char*, 14> kPos = {"WP", "WDT", "WRB", "VBZ", "VBD", "VB", "NN",
                                              "NNS", "NNP", "DT", "IN", "JJ", "CD", "MD"};

const char* word_for(std::string_view pos, Rng& rng) {
  static constexpr std::array<const char*, 4> wh = {"What", "Which", "Who", "How"};
  static constexpr std::array<const char*, 4> verbs = {"is", "was", "did", "does"};
  static constexpr std::array<const char*, 6> nouns = {"team", "city", "river", "year", "song", "war"};
  static constexpr std::array<const char*, 4> names = {"Denver", "Normandy", "Warsaw", "Tesla"};
  static constexpr std::array<const char*, 3> dets = {"the", "a", "this"};
  static constexpr std::array<const char*, 4> preps = {"of", "in", "for", "by"};
  static constexpr std::array<const char*, 4> adjs = {"first", "largest", "main", "old"};
  const auto base = pos.substr(0, pos.find('-'));
  auto pick = [&](const auto& list) { return list[rng.index(list.size())]; };
  if (base.starts_with("W")) return pick(wh);
  if (base.starts_with("VB") || base == "MD") return pick(verbs);
  if (base == "NNP") return pick(names);
  if (base.starts_with("NN")) return pick(nouns);
  if (base == "DT") return pick(dets);
  if (base == "IN") return pick(preps);
  if (base == "CD") return "two";
  if (base == "RB") return "often";
  return pick(adjs);
}

class Style {
 public:
  Style(std::size_t id, bool shared_pos) : shared_pos_(shared_pos) {
    tag_ = kTags[id % kTags.size()];
    if (id >= kTags.size()) tag_ += std::to_string(id / kTags.size());
  }

  std::string phrase(std::string_view base) const { return std::string(base) + "-" + tag_; }
  std::string pos(std::string_view base) const {
    return shared_pos_ ? std::string(base) : std::string(base) + "-" + tag_;
  }

  ParseTree preterminal(Rng& rng) const { return {pos(kPos[rng.index(kPos.size())]), {{"w", {}}}}; }

  ParseTree expand(const std::string& label, std::size_t depth, Rng& rng) const {
    ParseTree node{label, {}};
    const std::size_t n = 1 + rng.index(3);
    for (std::size_t i = 0; i < n; ++i) {
      if (depth < 3 && rng.bernoulli(0.45))
        node.children.push_back(expand(phrase(kPhrases[rng.index(kPhrases.size())]), depth + 1, rng));
      else
        node.children.push_back(preterminal(rng));
    }
    return node;
  }

  ParseTree random_template(Rng& rng) const {
    ParseTree root{"SBARQ", {}};
    root.children.push_back(expand(phrase(kWhPhrases[rng.index(kWhPhrases.size())]), 2, rng));
    root.children.push_back(expand(phrase("SQ"), 1, rng));
    root.children.push_back({".", {{"?", {}}}});
    return root;
  }

  // One random structural edit, applied in place.
  void mutate(ParseTree& tree, Rng& rng) const {
    std::vector<ParseTree*> phrases, preterms;
    collect(tree, phrases, preterms, true);
    const auto op = rng.index(3);
    if (op == 0 && !phrases.empty()) {
      phrases[rng.index(phrases.size())]->children.push_back(preterminal(rng));
    } else if (op == 1 && !preterms.empty()) {
      preterms[rng.index(preterms.size())]->label = pos(kPos[rng.index(kPos.size())]);
    } else if (!phrases.empty()) {
      ParseTree pp{phrase("PP"), {{pos("IN"), {{"w", {}}}}, {phrase("NP"), {{pos("NN"), {{"w", {}}}}}}}};
      phrases[rng.index(phrases.size())]->children.push_back(std::move(pp));
    }
  }

 private:
  static void collect(ParseTree& t, std::vector<ParseTree*>& phrases, std::vector<ParseTree*>& preterms,
                      bool root) {
    if (t.is_leaf()) return;
    const bool preterminal = t.children.size() == 1 && t.children.front().is_leaf();
    if (preterminal) {
      if (t.label != ".") preterms.push_back(&t);
      return;
    }
    if (!root) phrases.push_back(&t);
    for (auto& c : t.children) collect(c, phrases, preterms, false);
  }

  std::string tag_;
  bool shared_pos_;
};

void fill_words(ParseTree& t, Rng& rng, std::string& text) {
  for (auto& c : t.children) {
    if (c.is_leaf()) {
      if (c.label != "?") c.label = word_for(t.label, rng);
      if (!text.empty() && c.label != "?") text += ' ';
      text += c.label;
    } else {
      fill_words(c, rng, text);
    }
  }
}

QuestionRecord instantiate(const ParseTree& tmpl, const Style& style, double noise, std::string id,
                           std::size_t style_id, Rng& rng, std::size_t forced_edits = 0) {
  ParseTree tree = tmpl;
  if (rng.bernoulli(noise)) style.mutate(tree, rng);
  for (std::size_t e = 0; e < forced_edits; ++e) style.mutate(tree, rng);
  QuestionRecord q;
  fill_words(tree, rng, q.text);
  q.id = std::move(id);
  q.parse = print_bracketed(tree);
  q.topic = "style-" + std::to_string(style_id);
  return q;
}

std::vector<ParseTree> make_templates(const Style& style, std::size_t variants, Rng& rng) {
  std::vector<ParseTree> out{style.random_template(rng)};
  while (out.size() < variants) {
    ParseTree v = out.front();
    style.mutate(v, rng);
    out.push_back(std::move(v));
  }
  return out;
}

std::string make_id(std::string_view prefix, std::size_t a, std::size_t n) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*s%zu-%04zu", static_cast<int>(prefix.size()), prefix.data(), a, n);
  return buf;
}

}  // namespace

Fixture make_fixture(const FixtureConfig& cfg) {
  Rng rng(cfg.seed);
  std::vector<Style> styles;
  std::vector<std::vector<ParseTree>> templates;
  for (std::size_t c = 0; c < cfg.clusters; ++c) {
    styles.emplace_back(c, cfg.shared_pos);
    templates.push_back(make_templates(styles.back(), cfg.variants, rng));
  }

  const auto n_foreign = static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.per_cluster) * cfg.foreign_fraction / (1.0 - cfg.foreign_fraction)));

  Fixture fx;
  fx.corpus.source = "synthetic:seed=" + std::to_string(cfg.seed);
  fx.clusters.resize(cfg.clusters);
  fx.origin.resize(cfg.clusters);
  for (std::size_t c = 0; c < cfg.clusters; ++c) {
    std::vector<std::pair<QuestionRecord, std::size_t>> members;
    for (std::size_t n = 0; n < cfg.per_cluster; ++n) {
      const auto& tmpl = templates[c][rng.index(templates[c].size())];
      members.emplace_back(instantiate(tmpl, styles[c], cfg.noise, make_id("q", c, n), c, rng), c);
    }
    for (std::size_t n = 0; n < n_foreign && cfg.clusters > 1; ++n) {
      std::size_t s = rng.index(cfg.clusters - 1);
      if (s >= c) ++s;
      const auto& tmpl = templates[s][rng.index(templates[s].size())];
      members.emplace_back(
          instantiate(tmpl, styles[s], 0.0, make_id("x", c, n), s, rng, cfg.foreign_edits), s);
    }
    rng.shuffle(std::span(members));
    for (auto& [q, origin] : members) {
      fx.corpus.records.push_back(q);
      fx.clusters[c].push_back(std::move(q));
      fx.origin[c].push_back(origin);
    }
  }
  return fx;
}

Fixture make_nested_fixture(const NestedFixtureConfig& cfg) {
  Rng rng(cfg.seed);
  const Style style(0, true);
  const auto templates = make_templates(style, cfg.variants, rng);

  auto extend = [](ParseTree tree) {
    // The last phrase node in level order owns the last emitted label, so one
    // more preterminal child becomes the final label: one new trigram and one new 4-gram.
    std::vector<ParseTree*> order{&tree};
    ParseTree* last_phrase = &tree;
    for (std::size_t i = 0; i < order.size(); ++i) {
      ParseTree* node = order[i];
      if (node->is_leaf() || (node->children.size() == 1 && node->children.front().is_leaf())) continue;
      last_phrase = node;
      for (auto& c : node->children) order.push_back(&c);
    }
    last_phrase->children.push_back({"RB", {{"w", {}}}});
    return tree;
  };

  Fixture fx;
  fx.corpus.source = "synthetic-nested:seed=" + std::to_string(cfg.seed);
  fx.clusters.resize(2);
  fx.origin.resize(2);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t n = 0; n < cfg.per_cluster; ++n) {
      ParseTree tmpl = templates[rng.index(templates.size())];
      if (rng.bernoulli(cfg.noise)) style.mutate(tmpl, rng);
      if (c == 1) tmpl = extend(std::move(tmpl));
      auto q = instantiate(tmpl, style, 0.0, make_id(c == 0 ? "sub" : "sup", c, n), c, rng);
      fx.corpus.records.push_back(q);
      fx.clusters[c].push_back(std::move(q));
      fx.origin[c].push_back(c);
    }
  }
  return fx;
}

}  // namespace qfp
