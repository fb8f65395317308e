#include "qfp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "qfp/binary_io.hpp"
#include "qfp/corpus.hpp"
#include "qfp/error.hpp"
#include "qfp/eval.hpp"
#include "qfp/fingerprint.hpp"
#include "qfp/json_io.hpp"
#include "qfp/kfingerprints.hpp"
#include "qfp/parallel.hpp"
#include "qfp/rng.hpp"
#include "qfp/version.hpp"

namespace qfp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream ids for per-stage seeds derived from the master seed.
enum SeedStream : std::uint64_t { kClusterStream = 1, kSampleStream = 2, kBaselineStream = 3, kKfpStream = 4 };

const fs::path kCorpus = "corpus.jsonl";
const fs::path kParsed = "parsed.jsonl";
const fs::path kFeatures = "features.bin";
const fs::path kKdReport = "kd_report.json";
const fs::path kClusters = "clusters.jsonl";
const fs::path kSeeds = "seeds.jsonl";
const fs::path kBaseline = "baseline";
const fs::path kDetections = "detections.jsonl";
const fs::path kRecall = "recall.csv";
const fs::path kConfusion = "confusion";
const fs::path kKfp = "kfp";
const fs::path kReportJson = "report.json";
const fs::path kReportMd = "report.md";

std::string format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string cluster_dir(std::size_t c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cluster-%02zu", c);
  return buf;
}

std::string theta_stem(double theta) { return "theta-" + format("%.2f", theta); }

std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n"; }

// ---- configuration --------------------------------------------------------

template <typename T>
T get_field(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field \"") + key + "\" has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown config field \"" + where + key + "\"");
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

// Config fields that influence results; paths and worker count are excluded
// so that runs in different directories or with different --jobs compare equal.
json result_relevant_config(const PipelineConfig& cfg) {
  json j = pipeline_config_to_json(cfg);
  j.erase("paths");
  j.erase("jobs");
  return j;
}

// ---- manifests ------------------------------------------------------------

std::string file_hash(const fs::path& p) { return hex64(fnv1a(read_text_file(p))); }

// Relative path -> content hash, expanding directories into their regular files.
json hash_entries(const fs::path& root, const std::vector<fs::path>& rels) {
  json out = json::object();
  for (const auto& rel : rels) {
    const fs::path p = root / rel;
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
      std::sort(files.begin(), files.end());
      for (const auto& f : files) out[f.generic_string()] = file_hash(root / f);
    } else if (fs::exists(p)) {
      out[rel.generic_string()] = file_hash(p);
    }
  }
  return out;
}

fs::path manifest_path(const PipelineConfig& cfg, std::string_view stage) {
  return cfg.paths.work_dir / "manifests" / (std::string(stage) + ".json");
}

struct External {
  std::string name;
  fs::path path;
};

void write_manifest(const PipelineConfig& cfg, std::string_view stage, std::uint64_t stage_seed,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                    const std::vector<External>& externals = {}) {
  json ext = json::object();
  for (const auto& e : externals) ext[e.name] = {{"file", e.path.filename().string()}, {"hash", file_hash(e.path)}};
  const json m{{"stage", stage},
               {"tool_version", kVersion},
               {"seed", cfg.seed},
               {"stage_seed", stage_seed},
               {"config_hash", hex64(fnv1a(result_relevant_config(cfg).dump()))},
               {"external_inputs", ext},
               {"inputs", hash_entries(cfg.paths.work_dir, inputs)},
               {"outputs", hash_entries(cfg.paths.work_dir, outputs)}};
  write_text_file(manifest_path(cfg, stage), m.dump(2) + "\n");
}

void require_stage(const PipelineConfig& cfg, std::string_view needed_by, std::string_view stage) {
  if (!fs::exists(manifest_path(cfg, stage)))
    throw ConfigError(std::string(needed_by) + ": missing output of stage \"" + std::string(stage) + "\" in " +
                      cfg.paths.work_dir.string() + "; run " + std::string(stage) + " first");
}

fs::path require_input(const fs::path& p, const char* field) {
  if (p.empty()) throw ConfigError(std::string("config field \"") + field + "\" is not set");
  if (!fs::exists(p)) throw ConfigError(std::string(field) + ": no such file " + p.string());
  return p;
}

// ---- shared loaders -------------------------------------------------------

using Clusters = std::vector<std::vector<QuestionRecord>>;

Clusters load_base_clusters(const PipelineConfig& cfg) {
  const fs::path& w = cfg.paths.work_dir;
  const Corpus corpus = load_corpus(w / kParsed);
  std::map<std::string, const QuestionRecord*> by_id;
  for (const auto& r : corpus.records) by_id[r.id] = &r;
  std::vector<std::string> ids;
  const ClusterAssignment a = load_assignment(w / kClusters, &ids);
  Clusters out(a.k);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = by_id.find(ids[i]);
    if (it == by_id.end()) throw DataError(kClusters.string() + ": id " + ids[i] + " is not in the corpus");
    out[a.labels[i]].push_back(*it->second);
  }
  return out;
}

Clusters load_seeds(const PipelineConfig& cfg, const Clusters& base) {
  std::map<std::string, const QuestionRecord*> by_id;
  for (const auto& c : base)
    for (const auto& q : c) by_id[q.id] = &q;
  Clusters seeds(base.size());
  const std::string text = read_text_file(cfg.paths.work_dir / kSeeds);
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? text.size() : end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto c = j.at("cluster").get<std::size_t>();
      const auto id = j.at("id").get<std::string>();
      if (c >= seeds.size() || !by_id.contains(id))
        throw DataError(kSeeds.string() + ":" + std::to_string(line_no) + ": unknown cluster or id " + id);
      seeds[c].push_back(*by_id.at(id));
    } catch (const json::exception& e) {
      throw DataError(kSeeds.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return seeds;
}

std::vector<FingerprintSystem> load_baseline(const PipelineConfig& cfg, std::size_t k) {
  std::vector<FingerprintSystem> systems;
  for (std::size_t c = 0; c < k; ++c)
    systems.push_back(load_fingerprint(cfg.paths.work_dir / kBaseline / cluster_dir(c)));
  return systems;
}

FingerprintOptions fingerprint_options(const PipelineConfig& cfg) {
  FingerprintOptions fo;
  fo.featurizer = cfg.featurizer;
  fo.train = cfg.train;
  fo.threshold = cfg.threshold;
  return fo;
}

std::vector<double> thresholds(const PipelineConfig& cfg) {
  std::vector<double> t = cfg.sweep;
  t.push_back(cfg.threshold);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// ---- stages ---------------------------------------------------------------

void stage_ingest(const PipelineConfig& cfg) {
  const fs::path squad = require_input(cfg.paths.squad, "paths.squad");
  const Corpus corpus = extract_squad_questions(read_text_file(squad), cfg.topics, squad.filename().string());
  validate_ids(corpus);
  save_corpus(corpus, cfg.paths.work_dir / kCorpus);
  write_manifest(cfg, "ingest", 0, {}, {kCorpus}, {{"squad", squad}});
}

void stage_attach_parses(const PipelineConfig& cfg) {
  require_stage(cfg, "attach-parses", "ingest");
  const fs::path parses = require_input(cfg.paths.parses, "paths.parses");
  const Corpus corpus = attach_parses(load_corpus(cfg.paths.work_dir / kCorpus), load_parse_map(parses));
  save_corpus(corpus, cfg.paths.work_dir / kParsed);
  write_manifest(cfg, "attach-parses", 0, {kCorpus}, {kParsed}, {{"parses", parses}});
}

void stage_featurize(const PipelineConfig& cfg) {
  require_stage(cfg, "featurize", "attach-parses");
  const Corpus corpus = load_corpus(cfg.paths.work_dir / kParsed);
  std::vector<std::string> ids, parses;
  for (const auto& r : corpus.records) {
    ids.push_back(r.id);
    parses.push_back(r.parse);
  }
  save_feature_matrix(featurize_parses(ids, parses, cfg.featurizer), cfg.paths.work_dir / kFeatures);
  write_manifest(cfg, "featurize", 0, {kParsed}, {kFeatures, fs::path(kFeatures.string() + ".vocab")});
}

void stage_kd_report(const PipelineConfig& cfg) {
  require_stage(cfg, "kd-report", "featurize");
  const FeatureMatrix fm = load_feature_matrix(cfg.paths.work_dir / kFeatures);
  const KdDensityReport r = kd_density_report(fm.values, cfg.kd_leaf_capacity);
  json hist = json::array();
  for (const auto& [count, leaves] : r.occupancy_histogram) hist.push_back({{"points", count}, {"leaves", leaves}});
  json leaves = json::array();
  for (const auto& l : r.leaves) leaves.push_back({l.count, l.depth});
  const json out{{"leaf_capacity", r.leaf_capacity}, {"points", r.points},     {"dimensions", fm.values.cols},
                 {"leaf_count", r.leaves.size()},    {"max_depth", r.max_depth}, {"occupancy_histogram", hist},
                 {"leaves", leaves}};
  write_text_file(cfg.paths.work_dir / kKdReport, out.dump(2) + "\n");
  write_manifest(cfg, "kd-report", 0, {kFeatures}, {kKdReport});
}

void stage_cluster(const PipelineConfig& cfg) {
  require_stage(cfg, "cluster", "featurize");
  const FeatureMatrix fm = load_feature_matrix(cfg.paths.work_dir / kFeatures);
  const std::uint64_t seed = derive_seed(cfg.seed, kClusterStream);
  const ClusterAssignment a = kmeans_pp(fm.values, cfg.k, seed, cfg.kmeans);
  save_assignment(a, fm.ids, cfg.paths.work_dir / kClusters);
  write_manifest(cfg, "cluster", seed, {kFeatures}, {kClusters, fs::path(kClusters.string() + ".meta.json")});
}

void stage_sample(const PipelineConfig& cfg) {
  require_stage(cfg, "sample", "cluster");
  std::vector<std::string> ids;
  const ClusterAssignment a = load_assignment(cfg.paths.work_dir / kClusters, &ids);
  const std::uint64_t seed = derive_seed(cfg.seed, kSampleStream);
  std::string out;
  for (const auto& [c, members] : sample_seed_set(a, ids, cfg.per_cluster, seed))
    for (const auto& id : members) out += dump_line({{"cluster", c}, {"id", id}});
  write_text_file(cfg.paths.work_dir / kSeeds, out);
  write_manifest(cfg, "sample", seed, {kClusters}, {kSeeds});
}

void stage_train_baseline(const PipelineConfig& cfg) {
  require_stage(cfg, "train-baseline", "sample");
  const Clusters base = load_base_clusters(cfg);
  const Clusters seeds = load_seeds(cfg, base);
  const std::uint64_t seed = derive_seed(cfg.seed, kBaselineStream);
  std::vector<FingerprintSystem> systems(base.size());
  parallel_for(base.size(), cfg.jobs, [&](std::size_t c) {
    FingerprintOptions fo = fingerprint_options(cfg);
    fo.init_seed = derive_seed(seed, c);
    fo.train.shuffle_seed = derive_seed(fo.init_seed, 1);
    systems[c] = train_fingerprint(c, seeds[c], fo);
  });
  fs::remove_all(cfg.paths.work_dir / kBaseline);
  for (const auto& s : systems) save_fingerprint(s, cfg.paths.work_dir / kBaseline / cluster_dir(s.cluster_id));
  write_manifest(cfg, "train-baseline", seed, {kParsed, kClusters, kSeeds}, {kBaseline});
}

void stage_detect(const PipelineConfig& cfg) {
  require_stage(cfg, "detect", "train-baseline");
  const Clusters base = load_base_clusters(cfg);
  const auto systems = load_baseline(cfg, base.size());
  std::vector<BatchDetection> batches(base.size());
  parallel_for(base.size(), cfg.jobs, [&](std::size_t c) { batches[c] = detect_batch(systems[c], base[c]); });
  std::string out;
  for (std::size_t c = 0; c < base.size(); ++c)
    for (const auto& r : batches[c].results)
      out += dump_line({{"cluster", c}, {"id", r.id}, {"sim", r.sim}, {"detected", r.detected}, {"oov", r.oov_count}});
  write_text_file(cfg.paths.work_dir / kDetections, out);

  std::string csv = "cluster,size,detected,recall,inconsistent\n";
  for (const auto& row : recall_table(systems, base, cfg.threshold, cfg.low_recall_floor))
    csv += std::to_string(row.cluster_id) + "," + std::to_string(row.cluster_size) + "," +
           std::to_string(row.detected) + "," + format("%.17g", row.recall) + "," +
           (row.inconsistent ? "1" : "0") + "\n";
  write_text_file(cfg.paths.work_dir / kRecall, csv);
  write_manifest(cfg, "detect", 0, {kParsed, kClusters, kBaseline}, {kDetections, kRecall});
}

void stage_confusion(const PipelineConfig& cfg) {
  require_stage(cfg, "confusion", "train-baseline");
  const Clusters base = load_base_clusters(cfg);
  const auto systems = load_baseline(cfg, base.size());
  const SimTable table = cross_similarities(systems, base, cfg.jobs);
  fs::remove_all(cfg.paths.work_dir / kConfusion);
  for (const double t : thresholds(cfg))
    export_heatmap(confusion_from_sims(table, t), cfg.paths.work_dir / kConfusion / theta_stem(t));
  write_manifest(cfg, "confusion", 0, {kParsed, kClusters, kBaseline}, {kConfusion});
}

void stage_kfp(const PipelineConfig& cfg) {
  require_stage(cfg, "kfp", "sample");
  const Clusters base = load_base_clusters(cfg);
  const Clusters seeds = load_seeds(cfg, base);
  KfpOptions opts;
  opts.fingerprint = fingerprint_options(cfg);
  opts.max_iters = cfg.max_iters;
  opts.seed = derive_seed(cfg.seed, kKfpStream);
  const KfpResult result = kfp_run(base, seeds, opts, cfg.jobs);

  const fs::path dir = cfg.paths.work_dir / kKfp;
  fs::remove_all(dir);
  save_kfp_history(result.history, dir / "history.jsonl");
  std::string refined;
  for (const auto& c : result.clusters)
    for (const auto& q : c.refined) refined += dump_line({{"cluster", c.cluster_id}, {"id", q.id}});
  write_text_file(dir / "refined.jsonl", refined);
  for (const auto& s : result.final_systems) save_fingerprint(s, dir / "systems" / cluster_dir(s.cluster_id));

  json rows = json::array();
  for (const auto& r : kfp_report(result))
    rows.push_back({{"cluster", r.cluster_id},
                    {"status", to_string(r.status)},
                    {"initial_size", r.initial_size},
                    {"final_size", r.final_size},
                    {"iterations", r.iterations},
                    {"self_recall", r.self_recall},
                    {"cross_detection", r.cross_detection}});
  const json summary{{"rounds", result.rounds}, {"hit_max_iters", result.hit_max_iters}, {"clusters", rows}};
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");
  write_manifest(cfg, "kfp", opts.seed, {kParsed, kClusters, kSeeds}, {kKfp});
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text_file(p));
  } catch (const json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

std::string md_row(const std::vector<std::string>& cells) {
  std::string s = "|";
  for (const auto& c : cells) s += " " + c + " |";
  return s + "\n";
}

void stage_report(const PipelineConfig& cfg) {
  require_stage(cfg, "report", "detect");
  require_stage(cfg, "report", "confusion");
  const fs::path& w = cfg.paths.work_dir;
  const Clusters base = load_base_clusters(cfg);
  const FeatureMatrix fm = load_feature_matrix(w / kFeatures);

  json report;
  report["config"] = result_relevant_config(cfg);
  report["corpus"] = {{"questions", fm.ids.size()}, {"vocabulary", fm.vocab.size()}};
  json sizes = json::array();
  for (const auto& c : base) sizes.push_back(c.size());
  const json meta = read_json(fs::path(w / (kClusters.string() + ".meta.json")));
  report["clustering"] = {{"k", base.size()},
                          {"sizes", sizes},
                          {"iterations", meta.at("iterations")},
                          {"inertia", meta.at("inertia_trace").back()}};
  if (fs::exists(manifest_path(cfg, "kd-report"))) {
    const json kd = read_json(w / kKdReport);
    report["kd"] = {{"leaf_capacity", kd.at("leaf_capacity")},
                    {"leaf_count", kd.at("leaf_count")},
                    {"max_depth", kd.at("max_depth")},
                    {"occupancy_histogram", kd.at("occupancy_histogram")}};
  }

  json recall = json::array();
  double recall_sum = 0.0;
  std::vector<std::size_t> inconsistent;
  {
    const std::string text = read_text_file(w / kRecall);
    std::size_t pos = text.find('\n') + 1;
    while (pos < text.size()) {
      const auto end = text.find('\n', pos);
      std::vector<std::string> f;
      std::size_t s = pos;
      for (std::size_t e; (e = text.find(',', s)) < end; s = e + 1) f.push_back(text.substr(s, e - s));
      f.push_back(text.substr(s, end - s));
      pos = end + 1;
      if (f.size() != 5) throw DataError(kRecall.string() + ": malformed row");
      const double r = std::stod(f[3]);
      recall_sum += r;
      if (f[4] == "1") inconsistent.push_back(std::stoul(f[0]));
      recall.push_back({{"cluster", std::stoul(f[0])},
                        {"size", std::stoul(f[1])},
                        {"detected", std::stoul(f[2])},
                        {"recall", r},
                        {"inconsistent", f[4] == "1"}});
    }
  }
  const double mean_recall = recall.empty() ? 0.0 : recall_sum / static_cast<double>(recall.size());
  report["baseline"] = {{"threshold", cfg.threshold},
                        {"mean_recall", mean_recall},
                        {"recall", recall},
                        {"inconsistent_clusters", inconsistent}};

  json sweep = json::array();
  for (const double t : thresholds(cfg)) {
    ConfusionMatrix m;
    m.cells = read_heatmap_csv(w / kConfusion / (theta_stem(t) + ".csv"));
    m.k = m.cells.rows;
    m.threshold = t;
    json cells = json::array();
    for (std::size_t i = 0; i < m.k; ++i) {
      const auto row = m.cells.row(i);
      cells.push_back(std::vector<double>(row.begin(), row.end()));
    }
    sweep.push_back({{"threshold", t},
                     {"off_diagonal_max", m.off_diagonal_max()},
                     {"off_diagonal_sum", m.off_diagonal_sum()},
                     {"cells", cells}});
  }
  report["confusion"] = sweep;
  const bool have_kfp = fs::exists(manifest_path(cfg, "kfp"));
  report["kfp"] = have_kfp ? read_json(w / kKfp / "summary.json") : json(nullptr);
  write_text_file(w / kReportJson, report.dump(2) + "\n");

  std::string md = "# Question fingerprinting report\n\n";
  md += std::to_string(fm.ids.size()) + " questions, " + std::to_string(fm.vocab.size()) + " symbols, k = " +
        std::to_string(base.size()) + ", seed " + std::to_string(cfg.seed) + ".\n\n";
  md += "## Baseline recall at threshold " + format("%.2f", cfg.threshold) + "\n\n";
  md += md_row({"cluster", "size", "detected", "recall", "flag"}) + md_row({"---", "---", "---", "---", "---"});
  for (const auto& r : recall)
    md += md_row({std::to_string(r["cluster"].get<std::size_t>()), std::to_string(r["size"].get<std::size_t>()),
                  std::to_string(r["detected"].get<std::size_t>()), format("%.4f", r["recall"].get<double>()),
                  r["inconsistent"].get<bool>() ? "inconsistent" : ""});
  md += "\nMean recall " + format("%.4f", mean_recall) + ".\n\n## Confusion sweep\n\n";
  md += md_row({"threshold", "max off-diagonal", "sum off-diagonal"}) + md_row({"---", "---", "---"});
  for (const auto& s : sweep)
    md += md_row({format("%.2f", s["threshold"].get<double>()), format("%.4f", s["off_diagonal_max"].get<double>()),
                  format("%.4f", s["off_diagonal_sum"].get<double>())});
  if (have_kfp) {
    const json& kfp = report["kfp"];
    md += "\n## K-fingerprints\n\n" + std::to_string(kfp["rounds"].get<std::size_t>()) + " rounds" +
          (kfp["hit_max_iters"].get<bool>() ? " (iteration cap reached)" : "") + ".\n\n";
    md += md_row({"cluster", "status", "initial", "final", "iterations", "self recall", "max cross"}) +
          md_row({"---", "---", "---", "---", "---", "---", "---"});
    for (const auto& r : kfp["clusters"]) {
      double cross = 0.0;
      const auto id = r["cluster"].get<std::size_t>();
      const auto row = r["cross_detection"].get<std::vector<double>>();
      for (std::size_t j = 0; j < row.size(); ++j)
        if (j != id) cross = std::max(cross, row[j]);
      md += md_row({std::to_string(id), r["status"].get<std::string>(),
                    std::to_string(r["initial_size"].get<std::size_t>()),
                    std::to_string(r["final_size"].get<std::size_t>()),
                    std::to_string(r["iterations"].get<std::size_t>()), format("%.4f", r["self_recall"].get<double>()),
                    format("%.4f", cross)});
    }
  }
  write_text_file(w / kReportMd, md);
  write_manifest(cfg, "report", 0, {kRecall, kConfusion, kClusters}, {kReportJson, kReportMd});
}

using StageFn = void (*)(const PipelineConfig&);

const std::vector<std::pair<std::string_view, StageFn>>& stage_table() {
  static const std::vector<std::pair<std::string_view, StageFn>> table = {
      {"ingest", stage_ingest},   {"attach-parses", stage_attach_parses},   {"featurize", stage_featurize},
      {"kd-report", stage_kd_report}, {"cluster", stage_cluster},           {"sample", stage_sample},
      {"train-baseline", stage_train_baseline}, {"detect", stage_detect},   {"confusion", stage_confusion},
      {"kfp", stage_kfp},         {"report", stage_report}};
  return table;
}

}  // namespace

PipelineConfig pipeline_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
  reject_unknown(j,
                 {"paths", "topics", "featurizer", "k", "kd_leaf_capacity", "kmeans", "per_cluster", "train",
                  "threshold", "sweep", "low_recall_floor", "max_iters", "seed", "jobs"},
                 "");
  PipelineConfig c;
  try {
    if (j.contains("paths")) {
      const json& p = j.at("paths");
      reject_unknown(p, {"squad", "parses", "work_dir"}, "paths.");
      c.paths.squad = resolve(get_field<std::string>(p, "squad", ""), base_dir);
      c.paths.parses = resolve(get_field<std::string>(p, "parses", ""), base_dir);
      c.paths.work_dir = resolve(get_field<std::string>(p, "work_dir", c.paths.work_dir.string()), base_dir);
    }
    c.topics = get_field(j, "topics", c.topics);
    if (j.contains("featurizer")) {
      reject_unknown(j.at("featurizer"), {"include_terminals", "strip_annotations", "specs"}, "featurizer.");
      c.featurizer = j.at("featurizer").get<FeaturizerConfig>();
    }
    if (j.contains("train")) {
      reject_unknown(j.at("train"),
                     {"epochs", "learning_rate", "beta1", "beta2", "epsilon", "batch_size", "shuffle_seed"},
                     "train.");
      c.train = j.at("train").get<TrainConfig>();
    }
    if (j.contains("kmeans")) {
      const json& km = j.at("kmeans");
      reject_unknown(km, {"max_iters", "tol"}, "kmeans.");
      c.kmeans.max_iters = get_field(km, "max_iters", c.kmeans.max_iters);
      c.kmeans.tol = get_field(km, "tol", c.kmeans.tol);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid pipeline config: ") + e.what());
  }
  c.k = get_field(j, "k", c.k);
  c.kd_leaf_capacity = get_field(j, "kd_leaf_capacity", c.kd_leaf_capacity);
  c.per_cluster = get_field(j, "per_cluster", c.per_cluster);
  c.threshold = get_field(j, "threshold", c.threshold);
  c.sweep = get_field(j, "sweep", c.sweep);
  c.low_recall_floor = get_field(j, "low_recall_floor", c.low_recall_floor);
  c.max_iters = get_field(j, "max_iters", c.max_iters);
  c.seed = get_field(j, "seed", c.seed);
  c.jobs = get_field(j, "jobs", c.jobs);
  validate_pipeline_config(c);
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return pipeline_config_from_json(j, path.parent_path());
}

json pipeline_config_to_json(const PipelineConfig& c) {
  return {{"paths",
           {{"squad", c.paths.squad.generic_string()},
            {"parses", c.paths.parses.generic_string()},
            {"work_dir", c.paths.work_dir.generic_string()}}},
          {"topics", c.topics},
          {"featurizer", c.featurizer},
          {"k", c.k},
          {"kd_leaf_capacity", c.kd_leaf_capacity},
          {"kmeans", {{"max_iters", c.kmeans.max_iters}, {"tol", c.kmeans.tol}}},
          {"per_cluster", c.per_cluster},
          {"train", c.train},
          {"threshold", c.threshold},
          {"sweep", c.sweep},
          {"low_recall_floor", c.low_recall_floor},
          {"max_iters", c.max_iters},
          {"seed", c.seed},
          {"jobs", c.jobs}};
}

void validate_pipeline_config(const PipelineConfig& c) {
  auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (c.featurizer.specs.empty()) throw ConfigError("featurizer.specs must not be empty");
  for (const auto& s : c.featurizer.specs)
    if (s.n == 0 || s.stride == 0) throw ConfigError("featurizer.specs: n and stride must be at least 1");
  if (c.k < 2) throw ConfigError("k must be at least 2");
  if (c.kd_leaf_capacity == 0) throw ConfigError("kd_leaf_capacity must be at least 1");
  if (c.kmeans.max_iters == 0) throw ConfigError("kmeans.max_iters must be at least 1");
  if (c.per_cluster == 0) throw ConfigError("per_cluster must be at least 1");
  if (c.train.epochs == 0) throw ConfigError("train.epochs must be at least 1");
  if (c.train.batch_size == 0) throw ConfigError("train.batch_size must be at least 1");
  if (!(c.train.adam.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!in_unit(c.threshold) || c.threshold == 0.0) throw ConfigError("threshold must lie in (0, 1]");
  for (const double t : c.sweep)
    if (!in_unit(t)) throw ConfigError("sweep thresholds must lie in [0, 1]");
  if (!in_unit(c.low_recall_floor)) throw ConfigError("low_recall_floor must lie in [0, 1]");
  if (c.max_iters == 0) throw ConfigError("max_iters must be at least 1");
  if (c.jobs == 0) throw ConfigError("jobs must be at least 1");
  if (c.paths.work_dir.empty()) throw ConfigError("paths.work_dir must not be empty");
}

const std::vector<std::string_view>& pipeline_stages() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> n;
    for (const auto& [name, _] : stage_table()) n.push_back(name);
    return n;
  }();
  return names;
}

void run_stage(std::string_view stage, const PipelineConfig& cfg) {
  validate_pipeline_config(cfg);
  for (const auto& [name, fn] : stage_table())
    if (name == stage) return fn(cfg);
  throw ConfigError("unknown stage \"" + std::string(stage) + "\"");
}

void run_pipeline(const PipelineConfig& cfg) {
  for (const auto& name : pipeline_stages()) run_stage(name, cfg);
}

fs::path write_fixture_inputs(const Fixture& fixture, const fs::path& dir, const PipelineConfig& base) {
  json data = json::array();
  std::map<std::string, std::size_t> article_of;
  ParseMap parses;
  for (const auto& r : fixture.corpus.records) {
    const std::string topic = r.topic.value_or("untitled");
    auto [it, fresh] = article_of.try_emplace(topic, data.size());
    if (fresh) data.push_back({{"title", topic}, {"paragraphs", {{{"context", ""}, {"qas", json::array()}}}}});
    data[it->second]["paragraphs"][0]["qas"].push_back(
        {{"id", r.id}, {"question", r.text}, {"answers", json::array()}});
    parses[r.id] = r.parse;
  }
  write_text_file(dir / "squad.json", json{{"version", "1.1"}, {"data", data}}.dump() + "\n");
  save_parse_map(parses, dir / "parses.jsonl");

  PipelineConfig cfg = base;
  cfg.paths.squad = "squad.json";
  cfg.paths.parses = "parses.jsonl";
  if (cfg.paths.work_dir.empty() || cfg.paths.work_dir == PipelineConfig{}.paths.work_dir) cfg.paths.work_dir = "out";
  cfg.k = fixture.clusters.size();
  json j = pipeline_config_to_json(cfg);
  j.erase("jobs");
  write_text_file(dir / "config.json", j.dump(2) + "\n");
  return dir / "config.json";
}

const std::vector<fs::path>& report_files() {
  static const std::vector<fs::path> files = {kReportJson, kReportMd};
  return files;
}

}  // namespace qfp
