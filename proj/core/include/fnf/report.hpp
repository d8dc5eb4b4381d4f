#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fnf/similarity.hpp"

namespace fnf {

inline constexpr const char* kReportSchema = "fnf-report/1";

/// Qualitative reading of an FNF score; no lineage verdict is implied.
std::string score_band(double fnf_score);

/// `{"schema": "fnf-report/1", ...}` document for one comparison.
std::string report_json(const SimilarityReport& report);

/// Several comparisons of the same pair at different K.
std::string sweep_json(const std::vector<SimilarityReport>& reports);

std::string iou_json(const IouReport& report, const std::string& model_a,
                     const std::string& model_b);
std::string cka_json(double cka, const std::string& model_a, const std::string& model_b);

/// Rows are networks of model A, columns networks of model B. No header.
std::string matrix_csv(const Eigen::MatrixXd& matrix);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fnf
