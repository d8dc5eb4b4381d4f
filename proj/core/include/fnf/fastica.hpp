#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace fnf {

enum class Contrast { LogCosh };

struct IcaConfig {
  std::uint64_t seed = 0;
  double tol = 1e-4;
  int max_iter = 200;
  int restarts = 3;
  Contrast contrast = Contrast::LogCosh;
  double alpha = 1.0;

  void validate() const;
};

/// Orthogonal rotation of whitened space; sources = rotation * spatial.
struct Unmixing {
  Eigen::MatrixXd rotation;
  int iterations_used = 0;
  bool converged = false;
  std::uint64_t seed_used = 0;
  double final_delta = 0.0;  // max_i |1 - |<m_new_i, m_old_i>|| at the last step
};

inline constexpr double kWhiteningCheckTolerance = 1e-5;
inline constexpr double kEigenvalueFloor = 1e-12;

/// Symmetric (parallel) FastICA over the columns of a K x D whitened matrix.
///
/// Each step applies the fixed-point update with g(u) = tanh(alpha u) and then
/// the symmetric decorrelation M <- (M M^T)^{-1/2} M. Iteration stops when
/// every row moved by less than `tol` in angle-cosine terms. When an attempt
/// fails to converge within `max_iter`, the next attempt reseeds with seed + 1;
/// after `restarts` attempts the best iterate seen is returned with
/// converged = false. Throws BadWhitening if (1/D) X X^T is not the identity.
Unmixing run_fastica(const Eigen::MatrixXd& spatial, const IcaConfig& cfg);

/// (M M^T)^{-1/2} M with eigenvalues floored at kEigenvalueFloor.
Eigen::MatrixXd symmetric_decorrelation(const Eigen::MatrixXd& m);

/// Normalized Amari index of a K x K "gain" matrix P = W A (estimated
/// unmixing times true mixing). 0 iff P is a scaled permutation; at most 1.
double amari_index(const Eigen::MatrixXd& p);

}  // namespace fnf
