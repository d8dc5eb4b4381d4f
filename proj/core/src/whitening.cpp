#include "fnf/whitening.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "fnf/error.hpp"

namespace fnf {

PcaModel fit_pca(const GroupMatrix& group, std::size_t k) {
  const std::size_t t = group.rows();
  const std::size_t d = group.cols();
  if (k < 1 || k > std::min(t, d)) {
    fail(ErrorKind::KOutOfRange, "K=" + std::to_string(k) + " must lie in [1, min(T=" +
                                     std::to_string(t) + ", D=" + std::to_string(d) + ")]");
  }

  PcaModel pca;
  pca.rows = t;
  pca.mean = group.matrix.colwise().mean().transpose();
  const Eigen::MatrixXd centered = group.matrix.rowwise() - pca.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const auto kk = static_cast<Eigen::Index>(k);
  if (sigma.size() < kk || sigma(0) <= 0.0 || sigma(kk - 1) <= kRankTolerance * sigma(0)) {
    const double top = sigma.size() > 0 ? sigma(0) : 0.0;
    const double kth = sigma.size() >= kk ? sigma(kk - 1) : 0.0;
    fail(ErrorKind::RankDeficient, "centered activations have rank < K=" + std::to_string(k) +
                                       " (sigma_1=" + std::to_string(top) +
                                       ", sigma_K=" + std::to_string(kth) + ")");
  }

  pca.singular_values = sigma.head(kk);
  pca.basis = svd.matrixV().leftCols(kk);
  for (Eigen::Index c = 0; c < kk; ++c) {
    Eigen::Index lead = 0;
    pca.basis.col(c).cwiseAbs().maxCoeff(&lead);
    if (pca.basis(lead, c) < 0.0) pca.basis.col(c) *= -1.0;
  }
  for (Eigen::Index c = 0; c + 1 < kk; ++c) {
    if (sigma(c) - sigma(c + 1) <= kDegenerateGap * sigma(c)) pca.degenerate_spectrum = true;
  }
  // The gap to the first discarded value also matters: it decides which subspace is kept.
  if (sigma.size() > kk && sigma(kk - 1) - sigma(kk) <= kDegenerateGap * sigma(kk - 1)) {
    pca.degenerate_spectrum = true;
  }
  return pca;
}

WhitenedData whiten(const GroupMatrix& group, const PcaModel& pca) {
  if (group.cols() != pca.dim()) {
    fail(ErrorKind::DimensionMismatch, "group matrix has " + std::to_string(group.cols()) +
                                           " neurons, PCA model expects " +
                                           std::to_string(pca.dim()));
  }
  const double t = static_cast<double>(group.rows());
  const double d = static_cast<double>(group.cols());

  WhitenedData w;
  const Eigen::VectorXd scale = pca.singular_values.cwiseInverse() * std::sqrt(t);
  w.temporal = ((group.matrix.rowwise() - pca.mean.transpose()) * pca.basis) * scale.asDiagonal();
  w.spatial = std::sqrt(d) * pca.basis.transpose();
  return w;
}

double temporal_whitening_error(const WhitenedData& w) {
  const auto k = w.temporal.cols();
  const double t = static_cast<double>(w.temporal.rows());
  const Eigen::MatrixXd cov = (w.temporal.transpose() * w.temporal) / t;
  return (cov - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
}

double spatial_whitening_error(const Eigen::MatrixXd& spatial) {
  const auto k = spatial.rows();
  const double d = static_cast<double>(spatial.cols());
  const Eigen::MatrixXd cov = (spatial * spatial.transpose()) / d;
  return (cov - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
}

}  // namespace fnf
