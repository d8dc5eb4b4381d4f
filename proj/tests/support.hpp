#pragma once

// Shared fixtures for the unit and acceptance tests: seeded data generators
// plus brute-force reference implementations that share no code with the
// library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fnf/activation_store.hpp"

namespace fnf::test {

namespace fs = std::filesystem;

inline fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fnf_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

// Unit-variance Laplacian: difference of two exponentials with rate sqrt(2).
inline Eigen::MatrixXd laplacian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::exponential_distribution<double> ed(std::sqrt(2.0));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = ed(rng) - ed(rng);
  return m;
}

// Symmetric whitening of rows: returns C^{-1/2} X with C = X X^T / cols.
inline Eigen::MatrixXd whiten_rows(const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd c = x * x.transpose() / static_cast<double>(x.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  const Eigen::MatrixXd w = es.eigenvectors() *
                            es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                            es.eigenvectors().transpose();
  return w * x;
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(n, n, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

// Dump whose samples share a low-rank structure so PCA/ICA have something to find.
inline ActivationDump random_dump(std::uint64_t seed, std::size_t samples, std::size_t tokens,
                                  std::size_t dim, std::size_t sources = 8) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd mix = gaussian(static_cast<Eigen::Index>(sources),
                                       static_cast<Eigen::Index>(dim), rng);
  std::vector<ActivationMatrix> mats;
  for (std::size_t n = 0; n < samples; ++n) {
    Eigen::MatrixXd x = laplacian(static_cast<Eigen::Index>(tokens),
                                  static_cast<Eigen::Index>(sources), rng) * mix;
    x += 0.1 * gaussian(x.rows(), x.cols(), rng);
    mats.push_back(x.cast<float>());
  }
  return make_dump("random-" + std::to_string(seed), std::move(mats));
}

inline std::vector<std::uint32_t> random_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> p(n);
  std::iota(p.begin(), p.end(), 0u);
  std::mt19937_64 rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Column j of the result is column perm[j] of the input.
inline ActivationDump permute_neurons(const ActivationDump& dump,
                                      const std::vector<std::uint32_t>& perm) {
  ActivationDump out = dump;
  for (auto& s : out.samples) {
    ActivationMatrix m(s.matrix.rows(), s.matrix.cols());
    for (std::size_t j = 0; j < perm.size(); ++j)
      m.col(static_cast<Eigen::Index>(j)) = s.matrix.col(perm[j]);
    s.matrix = std::move(m);
  }
  out.manifest.model_name += "-permuted";
  return out;
}

inline ActivationDump scale_dump(const ActivationDump& dump, float c) {
  ActivationDump out = dump;
  for (auto& s : out.samples) s.matrix *= c;
  out.manifest.model_name += "-scaled";
  return out;
}

// ---------------------------------------------------------------------------
// Reference implementations
// ---------------------------------------------------------------------------

// O(n^2) average rank: 1 + (#smaller) + (#equal - 1) / 2.
inline std::vector<double> brute_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t less = 0;
    std::size_t equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = 1.0 + static_cast<double>(less) + (static_cast<double>(equal) - 1.0) / 2.0;
  }
  return r;
}

inline double brute_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  long double ma = 0;
  long double mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  long double sab = 0;
  long double saa = 0;
  long double sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

inline double brute_spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return brute_pearson(brute_ranks(a), brute_ranks(b));
}

// HSIC form: tr(K H L H) / sqrt(tr(K H K H) tr(L H L H)) with linear kernels.
inline double hsic_cka(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb) {
  const Eigen::Index t = xa.rows();
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(t, t) -
                            Eigen::MatrixXd::Constant(t, t, 1.0 / static_cast<double>(t));
  const Eigen::MatrixXd k = h * (xa * xa.transpose()) * h;
  const Eigen::MatrixXd l = h * (xb * xb.transpose()) * h;
  return (k * l).trace() / std::sqrt((k * k).trace() * (l * l).trace());
}

// Amari index straight from its definition, normalized by 2K(K-1).
inline double brute_amari(const Eigen::MatrixXd& p) {
  const auto k = p.rows();
  if (k < 2) return 0.0;
  const Eigen::MatrixXd a = p.cwiseAbs();
  double s = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) s += a.row(i).sum() / a.row(i).maxCoeff() - 1.0;
  for (Eigen::Index j = 0; j < k; ++j) s += a.col(j).sum() / a.col(j).maxCoeff() - 1.0;
  return s / (2.0 * static_cast<double>(k) * static_cast<double>(k - 1));
}

}  // namespace fnf::test
