#include "qfp/eval.hpp"

#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "qfp/error.hpp"
#include "qfp/parallel.hpp"

namespace qfp {

double ConfusionMatrix::off_diagonal_max() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j) worst = std::max(worst, cells(i, j));
  return worst;
}

double ConfusionMatrix::off_diagonal_sum() const {
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j) s += cells(i, j);
  return s;
}

SimTable cross_similarities(const std::vector<FingerprintSystem>& systems,
                            const std::vector<std::vector<QuestionRecord>>& clusters, std::size_t jobs) {
  if (systems.size() != clusters.size())
    throw DataError("confusion: " + std::to_string(systems.size()) + " systems but " +
                    std::to_string(clusters.size()) + " clusters");
  const std::size_t k = systems.size();
  SimTable table;
  table.sims.assign(k, std::vector<std::vector<double>>(k));
  parallel_for(k * k, jobs, [&](std::size_t cell) {
    const std::size_t i = cell / k, j = cell % k;
    auto& out = table.sims[i][j];
    out.reserve(clusters[j].size());
    for (const auto& q : clusters[j]) out.push_back(detect(systems[i], q).sim);
  });
  return table;
}

ConfusionMatrix confusion_from_sims(const SimTable& table, double threshold) {
  ConfusionMatrix m;
  m.k = table.sims.size();
  m.threshold = threshold;
  m.cells = Matrix(m.k, m.k);
  for (std::size_t i = 0; i < m.k; ++i)
    for (std::size_t j = 0; j < m.k; ++j) {
      const auto& s = table.sims[i][j];
      if (s.empty()) continue;
      std::size_t hits = 0;
      for (double v : s) hits += v >= threshold ? 1 : 0;
      m.cells(i, j) = static_cast<double>(hits) / static_cast<double>(s.size());
    }
  return m;
}

ConfusionMatrix confusion(const std::vector<FingerprintSystem>& systems,
                          const std::vector<std::vector<QuestionRecord>>& clusters, double threshold,
                          std::size_t jobs) {
  return confusion_from_sims(cross_similarities(systems, clusters, jobs), threshold);
}

std::vector<RecallRow> recall_table(const std::vector<FingerprintSystem>& systems,
                                    const std::vector<std::vector<QuestionRecord>>& clusters,
                                    double threshold, double low_recall_floor) {
  if (systems.size() != clusters.size()) throw DataError("recall_table: systems and clusters differ in count");
  std::vector<RecallRow> rows;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    RecallRow r;
    r.cluster_id = systems[i].cluster_id;
    r.cluster_size = clusters[i].size();
    for (const auto& q : clusters[i]) r.detected += detect(systems[i], q).sim >= threshold ? 1 : 0;
    r.recall = r.cluster_size == 0 ? 0.0 : static_cast<double>(r.detected) / static_cast<double>(r.cluster_size);
    r.inconsistent = r.recall < low_recall_floor;
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> cluster_signature(const std::vector<QuestionRecord>& members,
                                      const SymbolVocabulary& vocab, const FeaturizerConfig& featurizer) {
  if (members.empty()) throw DataError("cluster_signature: no members");
  std::vector<double> mean(vocab.size(), 0.0);
  for (const auto& q : members) {
    const auto v = vectorize(symbols_for_parse(q.parse, featurizer), vocab);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v.weights[i];
  }
  for (auto& x : mean) x /= static_cast<double>(members.size());
  return mean;
}

void export_heatmap(const ConfusionMatrix& m, const std::filesystem::path& stem) {
  std::string csv;
  char buf[32];
  for (std::size_t i = 0; i < m.k; ++i) {
    for (std::size_t j = 0; j < m.k; ++j) {
      if (j) csv += ',';
      std::snprintf(buf, sizeof buf, "%.17g", m.cells(i, j));
      csv += buf;
    }
    csv += '\n';
  }
  write_text_file(stem.string() + ".csv", csv);
  const nlohmann::json meta{{"format", "qfp-heatmap"},
                            {"k", m.k},
                            {"threshold", m.threshold},
                            {"rows", "fingerprint system"},
                            {"cols", "question cluster"},
                            {"csv", stem.filename().string() + ".csv"}};
  write_text_file(stem.string() + ".json", meta.dump(2) + "\n");
}

Matrix read_heatmap_csv(const std::filesystem::path& csv_path) {
  std::istringstream in(read_text_file(csv_path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError(csv_path.string() + ": bad cell \"" + cell + "\"");
      }
    }
    rows.push_back(std::move(row));
  }
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols) throw FormatError(csv_path.string() + ": ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  return m;
}

}  // namespace qfp
