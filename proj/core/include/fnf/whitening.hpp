#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "fnf/activation_store.hpp"

namespace fnf {

/// Top-K singular structure of the group-centered T x D activation matrix.
struct PcaModel {
  Eigen::VectorXd mean;             // D, per-neuron mean over all T rows
  Eigen::MatrixXd basis;            // D x K, orthonormal right singular vectors
  Eigen::VectorXd singular_values;  // K, strictly positive, non-increasing
  std::size_t rows = 0;             // T
  // Set when two retained singular values are nearly equal; the basis is then
  // only determined up to a rotation inside that subspace.
  bool degenerate_spectrum = false;

  std::size_t dim() const { return static_cast<std::size_t>(basis.rows()); }
  std::size_t components() const { return static_cast<std::size_t>(basis.cols()); }
};

struct WhitenedData {
  Eigen::MatrixXd temporal;  // Z, T x K with (1/T) Z^T Z = I
  Eigen::MatrixXd spatial;   // K x D with (1/D) S S^T = I
};

inline constexpr double kRankTolerance = 1e-10;
inline constexpr double kDegenerateGap = 1e-8;

/// Fits group PCA with K components. Basis columns follow a fixed sign
/// convention: the entry of largest magnitude in each column is positive.
/// Throws KOutOfRange when K is outside [1, min(T, D)] and RankDeficient when
/// sigma_K <= 1e-10 * sigma_1.
PcaModel fit_pca(const GroupMatrix& group, std::size_t k);

/// Z = (X - mean) V diag(sigma)^-1 sqrt(T); spatial = sqrt(D) V^T.
WhitenedData whiten(const GroupMatrix& group, const PcaModel& pca);

/// max |(1/T) Z^T Z - I| and max |(1/D) S S^T - I|.
double temporal_whitening_error(const WhitenedData& w);
double spatial_whitening_error(const Eigen::MatrixXd& spatial);

}  // namespace fnf
