#include "fnf/report.hpp"

#include <cstdio>
#include <fstream>

#include "fnf/error.hpp"
#include "json.hpp"

namespace fnf {
namespace {

using nlohmann::json;

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

json pairs(const std::vector<MatchedPair>& matched) {
  json out = json::array();
  for (const auto& p : matched) out.push_back({{"a", p.a}, {"b", p.b}, {"score", p.score}});
  return out;
}

json report_object(const SimilarityReport& r) {
  const auto& c = r.config;
  json j = {
      {"schema", kReportSchema},
      {"models", {{"a", c.model_a}, {"b", c.model_b}}},
      {"fingerprints", {{"a", c.fingerprint_a}, {"b", c.fingerprint_b}}},
      {"config",
       {{"k_a", c.k_a},
        {"k_b", c.k_b},
        {"z_threshold", c.z_threshold},
        {"seed_a", c.seed_a},
        {"seed_b", c.seed_b},
        {"align", to_string(c.align)},
        {"samples", c.samples},
        {"ica",
         {{"contrast", "logcosh"},
          {"alpha", c.ica.alpha},
          {"tol", c.ica.tol},
          {"max_iter", c.ica.max_iter},
          {"restarts", c.ica.restarts}}}}},
      {"fnf_score", r.fnf_score},
      {"band", score_band(r.fnf_score)},
      {"best_pair", {{"a", r.best_a}, {"b", r.best_b}}},
      {"per_sample_scores", r.per_sample_scores},
      {"strong_sample_fraction", r.strong_sample_fraction},
      {"greedy_matching", pairs(r.greedy_matching)},
      {"matrix", matrix_rows(r.matrix)},
      {"constant_time_courses", r.constant_courses},
      {"warnings", r.warnings},
  };
  j["cka"] = r.cka ? json(*r.cka) : json(nullptr);
  j["shared_mask_fnf"] = r.shared_mask_fnf ? json(*r.shared_mask_fnf) : json(nullptr);
  return j;
}

}  // namespace

std::string score_band(double s) {
  // Correlations of 0.5 and above are read as strong agreement.
  if (s >= 0.5) return "strong";
  if (s >= 0.3) return "weak";
  return "none";
}

std::string report_json(const SimilarityReport& report) {
  return report_object(report).dump(2) + "\n";
}

std::string sweep_json(const std::vector<SimilarityReport>& reports) {
  json list = json::array();
  for (const auto& r : reports) list.push_back(report_object(r));
  return json{{"schema", kReportSchema}, {"kind", "k_sweep"}, {"reports", list}}.dump(2) + "\n";
}

std::string iou_json(const IouReport& r, const std::string& model_a, const std::string& model_b) {
  json j = {{"schema", kReportSchema},
            {"kind", "iou"},
            {"models", {{"a", model_a}, {"b", model_b}}},
            {"max_iou", r.max_iou},
            {"best_pair", {{"a", r.best_a}, {"b", r.best_b}}},
            {"mean_matched_iou", r.mean_matched_iou},
            {"greedy_matching", pairs(r.greedy_matching)},
            {"matrix", matrix_rows(r.matrix)}};
  return j.dump(2) + "\n";
}

std::string cka_json(double cka, const std::string& model_a, const std::string& model_b) {
  json j = {{"schema", kReportSchema},
            {"kind", "cka"},
            {"models", {{"a", model_a}, {"b", model_b}}},
            {"cka", cka}};
  return j.dump(2) + "\n";
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j > 0) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace fnf
