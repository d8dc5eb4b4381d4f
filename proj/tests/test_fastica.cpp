#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "fnf/fastica.hpp"
#include "fnf/similarity.hpp"
#include "support.hpp"

using namespace fnf;
using fnf::test::kind_of;

namespace {

double orthogonality_error(const Eigen::MatrixXd& m) {
  return (m * m.transpose() - Eigen::MatrixXd::Identity(m.rows(), m.rows())).cwiseAbs().maxCoeff();
}

std::vector<double> row(const Eigen::MatrixXd& m, Eigen::Index i) {
  return std::vector<double>(m.row(i).begin(), m.row(i).end());
}

}  // namespace

TEST(FastIca, AmariMatchesDefinition) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd p = test::gaussian(5, 5, rng);
    EXPECT_NEAR(amari_index(p), test::brute_amari(p), 1e-12);
  }
  Eigen::MatrixXd signed_perm = Eigen::MatrixXd::Zero(3, 3);
  signed_perm(0, 2) = -2.0;
  signed_perm(1, 0) = 0.5;
  signed_perm(2, 1) = 1.0;
  EXPECT_EQ(amari_index(signed_perm), 0.0);
}

TEST(FastIca, SymmetricDecorrelationIsOrthogonal) {
  std::mt19937_64 rng(2);
  EXPECT_LT(orthogonality_error(symmetric_decorrelation(test::gaussian(7, 7, rng))), 1e-12);
}

TEST(FastIca, IndependentLaplacianRowsGiveSignedPermutation) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd s = test::whiten_rows(test::laplacian(6, 5000, rng));
  const auto u = run_fastica(s, IcaConfig{});
  EXPECT_TRUE(u.converged);
  EXPECT_LT(amari_index(u.rotation), 0.05);
  EXPECT_LT(orthogonality_error(u.rotation), 1e-5);
}

TEST(FastIca, UndoesFortyFiveDegreeRotation) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd s = test::laplacian(2, 4000, rng);
  Eigen::Matrix2d r;
  const double c = std::sqrt(0.5);
  r << c, -c, c, c;
  const Eigen::MatrixXd xw = test::whiten_rows(r * s);
  const auto u = run_fastica(xw, IcaConfig{});
  const Eigen::MatrixXd y = u.rotation * xw;
  for (Eigen::Index k = 0; k < 2; ++k) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < 2; ++j)
      best = std::max(best, std::abs(spearman(row(s, k), row(y, j))));
    EXPECT_GT(best, 0.95) << "source " << k;
  }
}

TEST(FastIca, DeterministicForSeed) {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd s = test::whiten_rows(test::laplacian(5, 2000, rng));
  IcaConfig cfg;
  cfg.seed = 17;
  const auto a = run_fastica(s, cfg);
  const auto b = run_fastica(s, cfg);
  EXPECT_EQ(a.rotation, b.rotation);
  EXPECT_EQ(a.iterations_used, b.iterations_used);
  EXPECT_EQ(a.seed_used, b.seed_used);
}

TEST(FastIca, GaussianRowsAreFlaggedNotThrown) {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd s = test::whiten_rows(test::gaussian(4, 3000, rng));
  IcaConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iter = 1;
  cfg.restarts = 2;
  Unmixing u;
  ASSERT_NO_THROW(u = run_fastica(s, cfg));
  EXPECT_FALSE(u.converged);
  EXPECT_GE(u.final_delta, cfg.tol);
  EXPECT_LT(orthogonality_error(u.rotation), 1e-5);

  // With a normal budget the flag must agree with the reported step size.
  u = run_fastica(s, IcaConfig{});
  EXPECT_EQ(u.converged, u.final_delta < IcaConfig{}.tol);
}

TEST(FastIca, RejectsUnwhitenedInput) {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd s = 2.0 * test::whiten_rows(test::laplacian(3, 1000, rng));
  EXPECT_EQ(kind_of([&] { run_fastica(s, IcaConfig{}); }), ErrorKind::BadWhitening);
}

TEST(FastIca, ConfigValidation) {
  IcaConfig cfg;
  cfg.tol = 0.0;
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::InvalidArgument);
  cfg = IcaConfig{};
  cfg.max_iter = 0;
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::InvalidArgument);
}
