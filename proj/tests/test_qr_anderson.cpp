#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tomocal/qr_update.hpp"

using namespace tomocal;

using oracle::random_matrix;

TEST_CASE("first appended column") {
  QrFactor qr(3);
  Eigen::Vector3d c(3.0, 0.0, 4.0);
  CHECK(qr.append_column(c));
  CHECK((qr.Q().col(0) - c / 5.0).norm() < 1e-15);
  CHECK(qr.R()(0, 0) == doctest::Approx(5.0));
  CHECK(qr.cols() == 1);
}

TEST_CASE("appended factors match a fresh QR up to column signs") {
  std::mt19937_64 rng(31);
  const Eigen::MatrixXd a = random_matrix(10, 4, rng);
  QrFactor qr(10);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(qr.append_column(a.col(j)));
  CHECK((qr.Q() * qr.R() - a).norm() <= 1e-10);

  Eigen::MatrixXd q_ref, r_ref;
  oracle::fresh_qr(a, q_ref, r_ref);
  Eigen::MatrixXd q = qr.Q(), r = qr.R();
  oracle::normalize_signs(q, r);
  CHECK((q - q_ref).norm() <= 1e-10);
  CHECK((r - r_ref).norm() <= 1e-10);
}

TEST_CASE("dropping the first column keeps a valid factorization") {
  std::mt19937_64 rng(32);
  const Eigen::MatrixXd a = random_matrix(9, 6, rng);
  QrFactor qr(9);
  for (Eigen::Index j = 0; j < 4; ++j) qr.append_column(a.col(j));
  qr.drop_first_column();
  CHECK((qr.Q() * qr.R() - a.middleCols(1, 3)).norm() <= 1e-10);
  qr.append_column(a.col(4));
  qr.drop_first_column();
  qr.append_column(a.col(5));
  CHECK((qr.Q() * qr.R() - a.middleCols(2, 4)).norm() <= 1e-10);
  CHECK((qr.Q().transpose() * qr.Q() - Eigen::MatrixXd::Identity(4, 4)).norm() <= 1e-10);
  const Eigen::MatrixXd r = qr.R();
  CHECK(r.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm() == 0.0);
}

TEST_CASE("dependent columns are refused") {
  QrFactor qr(4);
  Eigen::Vector4d c(1.0, 2.0, 0.0, -1.0);
  CHECK(qr.append_column(c));
  CHECK_FALSE(qr.append_column(2.0 * c));
  CHECK_FALSE(qr.append_column(Eigen::Vector4d::Zero()));
  CHECK(qr.cols() == 1);
}

TEST_CASE("least squares through the factors") {
  std::mt19937_64 rng(33);
  const Eigen::MatrixXd a = random_matrix(12, 3, rng);
  const Eigen::VectorXd b = random_matrix(12, 1, rng).col(0);
  QrFactor qr(12);
  for (Eigen::Index j = 0; j < 3; ++j) qr.append_column(a.col(j));
  CHECK((qr.solve_least_squares(b) - a.colPivHouseholderQr().solve(b)).norm() < 1e-12);
  CHECK(qr.condition_estimate() >= 1.0);
}

TEST_CASE("constant map converges in one step") {
  const Eigen::Vector3d c(1.0, -2.0, 0.5);
  const AndersonRun run = anderson_accelerate([&](const Eigen::VectorXd&) -> Eigen::VectorXd { return c; },
                                              Eigen::Vector3d::Zero(), 1, 5);
  CHECK((run.x - c).norm() == 0.0);
  CHECK(run.residual_norms.back() == 0.0);
}

TEST_CASE("affine contraction is solved in n + 1 steps") {
  std::mt19937_64 rng(34);
  Eigen::MatrixXd m = random_matrix(4, 4, rng);
  m *= 0.8 / m.jacobiSvd().singularValues()[0];
  const Eigen::VectorXd c = random_matrix(4, 1, rng).col(0);
  const Eigen::VectorXd x_star = (Eigen::MatrixXd::Identity(4, 4) - m).lu().solve(c);
  const AndersonRun run = anderson_accelerate([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return m * x + c; },
                                              Eigen::VectorXd::Zero(4), 4, 5);
  CHECK(run.iterations <= 5);
  CHECK((run.x - x_star).norm() < 1e-8);
}

TEST_CASE("mixing weights solve the constrained residual problem") {
  std::mt19937_64 rng(35);
  const Eigen::MatrixXd f = random_matrix(6, 3, rng);
  AndersonMixer mixer(2);
  // with x = 0 the residual of each call is g(x) itself
  for (Eigen::Index j = 0; j < 3; ++j) mixer.update(Eigen::VectorXd::Zero(6), f.col(j));
  REQUIRE(mixer.last_gamma().size() == 2);
  const Eigen::VectorXd alpha = anderson_alpha_from_gamma(mixer.last_gamma());
  CHECK(alpha.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((alpha - oracle::constrained_alpha(f)).norm() <= 1e-8);
}

TEST_CASE("alpha from gamma") {
  Eigen::Vector2d gamma(0.3, 0.5);
  const Eigen::VectorXd alpha = anderson_alpha_from_gamma(gamma);
  REQUIRE(alpha.size() == 3);
  CHECK(alpha[0] == doctest::Approx(0.3));
  CHECK(alpha[1] == doctest::Approx(0.2));
  CHECK(alpha[2] == doctest::Approx(0.5));
  CHECK(anderson_alpha_from_gamma(Eigen::VectorXd(0)).size() == 1);
}

TEST_CASE("window never exceeds the memory and fills up") {
  std::mt19937_64 rng(36);
  Eigen::MatrixXd m = random_matrix(8, 8, rng);
  m *= 0.9 / m.jacobiSvd().singularValues()[0];
  const Eigen::VectorXd c = random_matrix(8, 1, rng).col(0);
  AndersonMixer mixer(3);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(8);
  for (std::size_t k = 0; k < 6; ++k) {
    x = mixer.update(x, m * x + c);
    CHECK(mixer.window_size() <= 3);
    if (k >= 3) CHECK(mixer.window_size() == 3);
  }
}
