#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "tomocal/direct_reg.hpp"

using namespace tomocal;

using oracle::random_matrix;
using oracle::random_vector;
using oracle::decaying_problem;
using oracle::DiagProblem;
using oracle::gcv_explicit;

TEST_CASE("svd of the identity") {
  const SvdTriple s = svd(Eigen::MatrixXd::Identity(3, 3));
  CHECK((s.sigma - Eigen::VectorXd::Ones(3)).norm() < 1e-15);
}

TEST_CASE("svd orders a diagonal spectrum") {
  Eigen::VectorXd d(10);
  d << 1, 91, 92, 93, 94, 95, 96, 97, 98, 99;
  const SvdTriple s = svd(d.asDiagonal().toDenseMatrix());
  Eigen::VectorXd expected(10);
  expected << 99, 98, 97, 96, 95, 94, 93, 92, 91, 1;
  CHECK((s.sigma - expected).norm() < 1e-12);
}

TEST_CASE("svd factors reconstruct the matrix and are orthonormal") {
  std::mt19937_64 rng(1);
  for (auto [m, n] : {std::pair{8, 5}, std::pair{5, 8}}) {
    const Eigen::MatrixXd a = random_matrix(m, n, rng);
    const SvdTriple s = svd(a);
    CHECK((s.U * s.sigma.asDiagonal() * s.V.transpose() - a).norm() < 1e-10);
    const auto p = s.sigma.size();
    CHECK((s.U.transpose() * s.U - Eigen::MatrixXd::Identity(p, p)).norm() < 1e-10);
    CHECK((s.V.transpose() * s.V - Eigen::MatrixXd::Identity(p, p)).norm() < 1e-10);
    for (Eigen::Index i = 1; i < p; ++i) CHECK(s.sigma[i] <= s.sigma[i - 1]);
  }
}

TEST_CASE("tikhonov filter values") {
  auto phi = [](double sigma, double lambda) { return tikhonov_filter(Eigen::VectorXd::Constant(1, sigma), lambda).phi[0]; };
  CHECK(phi(1.0, 0.0) == 1.0);
  CHECK(phi(0.5, 0.5) == doctest::Approx(0.5));
  CHECK(phi(2.0, 1.0) == doctest::Approx(0.8));
  CHECK(phi(0.0, 0.0) == 0.0);
  CHECK_THROWS(tikhonov_filter(Eigen::VectorXd::Ones(2), -1.0));
}

TEST_CASE("tikhonov filter decreases in lambda and vanishes with sigma") {
  double prev = 1.0;
  for (double lambda = 0.01; lambda < 100.0; lambda *= 1.3) {
    const double p = tikhonov_filter(Eigen::VectorXd::Constant(1, 0.7), lambda).phi[0];
    CHECK(p < prev);
    prev = p;
  }
  CHECK(tikhonov_filter(Eigen::VectorXd::Constant(1, 1e-9), 0.1).phi[0] < 1e-15);
}

TEST_CASE("tsvd filter") {
  Eigen::VectorXd s(10);
  s << 99, 98, 97, 96, 95, 94, 93, 92, 91, 1;
  CHECK(tsvd_filter(s, 10).phi == Eigen::VectorXd::Ones(10));
  CHECK(tsvd_filter(s, 0).phi == Eigen::VectorXd::Zero(10));
  const auto phi = tsvd_filter(s, 9).phi;
  CHECK(phi.head(9) == Eigen::VectorXd::Ones(9));
  CHECK(phi[9] == 0.0);
}

TEST_CASE("unfiltered solve inverts a square system") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd a = random_matrix(6, 6, rng) + 6.0 * Eigen::MatrixXd::Identity(6, 6);
  const Eigen::VectorXd b = random_vector(6, rng);
  const SvdTriple s = svd(a);
  const Eigen::VectorXd x = filtered_solve(s, b, tikhonov_filter(s.sigma, 0.0));
  CHECK((x - a.lu().solve(b)).norm() < 1e-8);
}

TEST_CASE("tikhonov on a diagonal system has a closed form") {
  Eigen::VectorXd sig(3), b(3);
  sig << 3.0, 1.0, 0.2;
  b << 1.0, -2.0, 0.5;
  const double lambda = 0.4;
  const SvdTriple s = svd(sig.asDiagonal().toDenseMatrix());
  const Eigen::VectorXd x = filtered_solve(s, b, tikhonov_filter(s.sigma, lambda));
  for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(sig[i] * b[i] / (sig[i] * sig[i] + lambda * lambda)));
}

TEST_CASE("tikhonov filtered solve matches the normal equations") {
  std::mt19937_64 rng(4);
  for (double lambda : {1e-3, 0.1, 1.0, 10.0}) {
    const Eigen::MatrixXd a = random_matrix(20, 10, rng);
    const Eigen::VectorXd b = random_vector(20, rng);
    const SvdTriple s = svd(a);
    const Eigen::VectorXd x = filtered_solve(s, b, tikhonov_filter(s.sigma, lambda));
    const Eigen::VectorXd ref = oracle::tikhonov_normal_equations(a, b, lambda);
    CHECK((x - ref).norm() <= 1e-8 * std::max(1.0, ref.norm()));
  }
}

TEST_CASE("truncated solve at full rank is the pseudo-inverse solution") {
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd a = random_matrix(12, 5, rng) * random_matrix(5, 8, rng);  // rank 5
  const Eigen::VectorXd b = random_vector(12, rng);
  const SvdTriple s = svd(a);
  const Eigen::VectorXd x = filtered_solve(s, b, tsvd_filter(s.sigma, 5));
  const Eigen::VectorXd ref = a.completeOrthogonalDecomposition().solve(b);
  CHECK((x - ref).norm() < 1e-8);
}

TEST_CASE("regularization beats the naive inverse on a decaying spectrum") {
  Eigen::VectorXd sig(7);
  sig << 1, 0.5, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6;
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd a = sig.asDiagonal();
  const Eigen::VectorXd x_true = Eigen::VectorXd::Ones(7);
  const Eigen::VectorXd clean = a * x_true;
  const Eigen::VectorXd z = random_vector(7, rng);
  const Eigen::VectorXd b = clean + 0.01 * clean.norm() * z / z.norm();
  const SvdTriple s = svd(a);
  const double naive = (filtered_solve(s, b, tikhonov_filter(s.sigma, 0.0)) - x_true).norm();
  const double lambda = minimize_gcv(s, b);
  const double reg = (filtered_solve(s, b, tikhonov_filter(s.sigma, lambda)) - x_true).norm();
  CHECK(reg < naive);
}

TEST_CASE("gcv of the scalar system is one") {
  const SvdTriple s = svd(Eigen::MatrixXd::Ones(1, 1));
  for (double lambda : {1e-3, 0.5, 1.0, 7.0}) CHECK(gcv_value(s, Eigen::VectorXd::Ones(1), lambda) == doctest::Approx(1.0));
}

TEST_CASE("gcv matches explicit matrices") {
  std::mt19937_64 rng(9);
  const DiagProblem diag = decaying_problem(5, 0.5, 10);
  const Eigen::MatrixXd rect = random_matrix(12, 6, rng);
  const Eigen::VectorXd rect_b = random_vector(12, rng);
  for (double w : {1.0, 0.8, 0.3}) {
    for (double lambda : {1e-3, 0.05, 0.7}) {
      const double g = gcv_value(svd(diag.a), diag.b, lambda, w);
      CHECK(std::abs(g - gcv_explicit(diag.a, diag.b, lambda, w)) <= 1e-10 * g);
      const double gr = gcv_value(svd(rect), rect_b, lambda, w);
      CHECK(std::abs(gr - gcv_explicit(rect, rect_b, lambda, w)) <= 1e-10 * gr);
    }
  }
}

TEST_CASE("gcv scales quadratically with the data") {
  const DiagProblem p = decaying_problem(8, 0.4, 12);
  const SvdTriple s = svd(p.a);
  for (double c : {0.1, 3.0, 250.0}) {
    const double g = gcv_value(s, p.b, 0.02, 0.8);
    CHECK(std::abs(gcv_value(s, c * p.b, 0.02, 0.8) - c * c * g) <= 1e-10 * c * c * g);
  }
}

TEST_CASE("gcv is infinite for a square unfiltered system") {
  const SvdTriple s = svd(Eigen::MatrixXd::Identity(3, 3));
  CHECK(std::isinf(gcv_value(s, Eigen::VectorXd::Ones(3), 0.0, 1.0)));
}

TEST_CASE("minimize_gcv matches a dense log grid") {
  for (std::uint64_t seed : {1u, 2u, 3u, 13u}) {
  CAPTURE(seed);
  const DiagProblem p = decaying_problem(20, 0.7, seed);
  const SvdTriple s = svd(p.a);
  for (double w : {1.0, 0.8}) {
    const LambdaBracket br = default_gcv_bracket(s.sigma);
    double step = 0.0;
    const double best = oracle::log_grid_argmin([&](double l) { return gcv_value(s, p.b, l, w); }, br.lo, br.hi, 10000, step);
    const double lambda = minimize_gcv(s, p.b, w);
    CHECK(std::abs(std::log(lambda) - std::log(best)) <= step);
    CHECK(gcv_value(s, p.b, lambda, w) <= gcv_value(s, p.b, br.lo, w));
    CHECK(gcv_value(s, p.b, lambda, w) <= gcv_value(s, p.b, br.hi, w));
  }
  }
}

TEST_CASE("gcv stays smooth far below the smallest singular value") {
  const DiagProblem p = decaying_problem(20, 0.7, 3);
  const SvdTriple s = svd(p.a);
  const double lo = default_gcv_bracket(s.sigma).lo;
  std::vector<double> g;
  for (int i = 0; i < 200; ++i) g.push_back(gcv_value(s, p.b, lo * std::exp(0.01 * i), 1.0));
  for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(std::abs(g[i + 1] - 2.0 * g[i] + g[i - 1]) <= 1e-10 * g[i]);
}

TEST_CASE("consistent data needs no smoothing") {
  std::mt19937_64 rng(14);
  const Eigen::MatrixXd a = random_matrix(20, 10, rng);
  const Eigen::VectorXd b = a * random_vector(10, rng);
  const SvdTriple s = svd(a);
  const LambdaBracket br = default_gcv_bracket(s.sigma);
  const double lambda = minimize_gcv(s, b);
  CHECK(std::log(lambda) - std::log(br.lo) <= 1e-3 * (std::log(br.hi) - std::log(br.lo)));
}

TEST_CASE("default bracket") {
  Eigen::VectorXd s(4);
  s << 5.0, 2.0, 0.5, 0.0;
  const LambdaBracket br = default_gcv_bracket(s);
  CHECK(br.lo == doctest::Approx(0.5e-6));
  CHECK(br.hi == 5.0);
  CHECK_THROWS(default_gcv_bracket(Eigen::VectorXd::Zero(3)));
}
