#include "fnf/fastica.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "fnf/error.hpp"
#include "fnf/whitening.hpp"

namespace fnf {
namespace {

Eigen::MatrixXd random_start(Eigen::Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = normal(rng);
  return symmetric_decorrelation(m);
}

struct Attempt {
  Eigen::MatrixXd rotation;
  int iterations = 0;
  double delta = std::numeric_limits<double>::infinity();
  bool converged = false;
};

Attempt iterate(const Eigen::MatrixXd& x, const IcaConfig& cfg, std::uint64_t seed) {
  const auto k = x.rows();
  const double d = static_cast<double>(x.cols());
  Attempt out;
  Eigen::MatrixXd m = random_start(k, seed);
  Eigen::MatrixXd best = m;

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Eigen::MatrixXd g = (cfg.alpha * (m * x)).array().tanh().matrix();
    const Eigen::VectorXd g_prime_mean =
        (cfg.alpha * (1.0 - g.array().square())).rowwise().mean().matrix();
    Eigen::MatrixXd next = (g * x.transpose()) / d - g_prime_mean.asDiagonal() * m;
    next = symmetric_decorrelation(next);

    const double delta =
        (1.0 - (next.cwiseProduct(m)).rowwise().sum().array().abs()).abs().maxCoeff();
    m = std::move(next);
    out.iterations = it;
    if (delta < out.delta) {
      out.delta = delta;
      best = m;
    }
    if (delta < cfg.tol) {
      out.converged = true;
      out.rotation = m;
      out.delta = delta;
      return out;
    }
  }
  out.rotation = std::move(best);
  return out;
}

}  // namespace

void IcaConfig::validate() const {
  if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "ICA tol must be > 0");
  if (max_iter < 1) fail(ErrorKind::InvalidArgument, "ICA max_iter must be >= 1");
  if (restarts < 1) fail(ErrorKind::InvalidArgument, "ICA restarts must be >= 1");
  if (!(alpha > 0.0)) fail(ErrorKind::InvalidArgument, "ICA alpha must be > 0");
}

Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m * m.transpose());
  const Eigen::VectorXd inv_sqrt =
      es.eigenvalues().cwiseMax(kEigenvalueFloor).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose() * m;
}

Unmixing run_fastica(const Eigen::MatrixXd& spatial, const IcaConfig& cfg) {
  cfg.validate();
  if (spatial.rows() < 1 || spatial.cols() < 2) {
    fail(ErrorKind::BadWhitening, "FastICA needs a K x D input with K >= 1, D >= 2");
  }
  const double err = spatial_whitening_error(spatial);
  if (!(err <= kWhiteningCheckTolerance)) {
    fail(ErrorKind::BadWhitening, "input is not whitened: max |(1/D) X X^T - I| = " +
                                      std::to_string(err));
  }

  Unmixing result;
  double best_delta = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < cfg.restarts; ++attempt) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(attempt);
    Attempt a = iterate(spatial, cfg, seed);
    if (a.converged || a.delta < best_delta) {
      best_delta = a.delta;
      result.rotation = std::move(a.rotation);
      result.seed_used = seed;
      result.final_delta = a.delta;
      result.converged = a.converged;
      result.iterations_used = a.iterations;
    }
    if (result.converged) break;
  }
  return result;
}

double amari_index(const Eigen::MatrixXd& p) {
  const auto k = p.rows();
  if (k != p.cols() || k < 2) {
    fail(ErrorKind::DimensionMismatch, "Amari index needs a square matrix with K >= 2");
  }
  const Eigen::MatrixXd a = p.cwiseAbs();
  double rows = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) rows += a.row(i).sum() / a.row(i).maxCoeff() - 1.0;
  double cols = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) cols += a.col(j).sum() / a.col(j).maxCoeff() - 1.0;
  return (rows + cols) / (2.0 * static_cast<double>(k) * static_cast<double>(k - 1));
}

}  // namespace fnf
