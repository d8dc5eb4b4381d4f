#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fnf/activation_store.hpp"
#include "fnf/networks.hpp"

namespace fnf {

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

/// 1-based ranks; tied values share the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> values);

struct RankCorrelation {
  double rho = 0.0;
  bool constant_input = false;  // rho is defined as 0 when either side is constant
};

/// Pearson correlation of average ranks. Throws LengthMismatch / TooShort.
RankCorrelation spearman_detail(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Cross-model functional network comparison
// ---------------------------------------------------------------------------

enum class AlignPolicy { Strict, Truncate };

/// Shortest per-sample series accepted under AlignPolicy::Truncate.
inline constexpr std::size_t kMinAlignedTokens = 16;
/// Per-sample correlation counted as strong agreement.
inline constexpr double kStrongCorrelation = 0.5;

/// Per-sample series length shared by both models. Strict requires identical
/// token counts; Truncate uses the shorter one and refuses fewer than 16.
/// Throws SampleCountMismatch / TokenCountMismatch.
std::vector<std::size_t> aligned_lengths(const ActivationDump& a, const ActivationDump& b,
                                         AlignPolicy align);

struct MatchedPair {
  std::size_t a = 0;
  std::size_t b = 0;
  double score = 0.0;
};

struct ReportConfig {
  std::size_t k_a = 0;
  std::size_t k_b = 0;
  double z_threshold = 0.0;
  std::uint64_t seed_a = 0;
  std::uint64_t seed_b = 0;
  IcaConfig ica;
  AlignPolicy align = AlignPolicy::Strict;
  std::string model_a;
  std::string model_b;
  std::string fingerprint_a;
  std::string fingerprint_b;
  std::size_t samples = 0;
};

struct SimilarityReport {
  Eigen::MatrixXd matrix;  // K_A x K_B, entry (i, j) = mean over samples of rho_ij
  double fnf_score = 0.0;  // largest entry
  std::size_t best_a = 0;
  std::size_t best_b = 0;
  std::vector<double> per_sample_scores;  // rho at the best pair, one per sample
  double strong_sample_fraction = 0.0;    // share of samples with rho >= 0.5 at the best pair
  std::vector<MatchedPair> greedy_matching;
  std::optional<double> cka;
  std::optional<double> shared_mask_fnf;
  std::size_t constant_courses = 0;
  ReportConfig config;
  std::vector<std::string> warnings;
};

/// Sample-averaged K_A x K_B Spearman matrix between the two models' network
/// time courses, with the headline score and the derived summaries. Sums over
/// samples run left to right, so fnf_matrix(A, B) == fnf_matrix(B, A)^T exactly.
SimilarityReport fnf_matrix(const FunctionalNetworks& nets_a, const ActivationDump& dump_a,
                            const FunctionalNetworks& nets_b, const ActivationDump& dump_b,
                            AlignPolicy align = AlignPolicy::Strict);

/// Applies model A's masks to both dumps and averages rho_kk over networks and samples.
double average_fnf_shared_masks(const FunctionalNetworks& nets_a, const ActivationDump& dump_a,
                                const ActivationDump& dump_b,
                                AlignPolicy align = AlignPolicy::Strict);

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// Linear CKA on column-centered matrices with matching row counts.
double linear_cka(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb);

/// Linear CKA over the row-concatenated samples of two dumps.
double linear_cka(const ActivationDump& a, const ActivationDump& b,
                  AlignPolicy align = AlignPolicy::Strict);

double iou(const NeuronMask& a, const NeuronMask& b);

struct IouReport {
  Eigen::MatrixXd matrix;  // K_A x K_B
  double max_iou = 0.0;
  std::size_t best_a = 0;
  std::size_t best_b = 0;
  std::vector<MatchedPair> greedy_matching;
  double mean_matched_iou = 0.0;
};

/// All-pairs mask IoU between two network sets over the same neuron space.
IouReport mask_iou(const FunctionalNetworks& a, const FunctionalNetworks& b);

/// One-to-one pairs by descending score (ties in row-major order).
std::vector<MatchedPair> greedy_matching(const Eigen::MatrixXd& scores);

std::string to_string(AlignPolicy policy);

}  // namespace fnf
