#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. None of them calls into the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tomocal/phantom.hpp"
#include "tomocal/projector.hpp"

namespace oracle {

inline Eigen::MatrixXd random_matrix(Eigen::Index m, Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) a(i, j) = g(rng);
  return a;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) { return random_matrix(n, 1, rng).col(0); }

// Brute-force membership: each pixel center is tested against every ellipse.
inline double phantom_value(const std::array<tomocal::Ellipse, 10>& table, double x, double y) {
  double v = 0.0;
  for (const tomocal::Ellipse& e : table) {
    const double t = e.phi_deg * std::numbers::pi / 180.0;
    const double dx = x - e.x0, dy = y - e.y0;
    const double u = dx * std::cos(t) + dy * std::sin(t);
    const double w = dy * std::cos(t) - dx * std::sin(t);
    if (u * u / (e.a * e.a) + w * w / (e.b * e.b) <= 1.0) v += e.intensity;
  }
  return std::max(v, 0.0);
}

// Number of pixels of shepp_logan(side) that differ from the membership oracle.
inline std::size_t phantom_mismatches(const tomocal::ImageGrid& img, bool modified) {
  std::size_t bad = 0;
  const auto side = static_cast<double>(img.side);
  for (std::size_t r = 0; r < img.side; ++r) {
    for (std::size_t c = 0; c < img.side; ++c) {
      const double x = -1.0 + (2.0 * static_cast<double>(c) + 1.0) / side;
      const double y = 1.0 - (2.0 * static_cast<double>(r) + 1.0) / side;
      if (img.at(r, c) != phantom_value(tomocal::shepp_logan_ellipses(modified), x, y)) ++bad;
    }
  }
  return bad;
}

// Length of the segment from p to q inside [-1,1]^2 by parametric clipping.
inline double chord_in_square(tomocal::Point2 p, tomocal::Point2 q) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = q.x - p.x, dy = q.y - p.y;
  const double pv[4] = {-dx, dx, -dy, dy};
  const double qv[4] = {p.x + 1.0, 1.0 - p.x, p.y + 1.0, 1.0 - p.y};
  for (int i = 0; i < 4; ++i) {
    if (pv[i] == 0.0) {
      if (qv[i] < 0.0) return 0.0;
      continue;
    }
    const double t = qv[i] / pv[i];
    if (pv[i] < 0.0)
      t0 = std::max(t0, t);
    else
      t1 = std::min(t1, t);
  }
  return t1 > t0 ? (t1 - t0) * std::hypot(dx, dy) : 0.0;
}

// (A^T A + lambda^2 I) x = A^T b.
inline Eigen::VectorXd tikhonov_normal_equations(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double lambda) {
  const Eigen::MatrixXd lhs = a.transpose() * a + lambda * lambda * Eigen::MatrixXd::Identity(a.cols(), a.cols());
  return lhs.ldlt().solve(a.transpose() * b);
}

// m ||A x_reg - b||^2 / trace(I - w A (A^T A + l^2 I)^-1 A^T)^2 from explicit matrices.
inline double gcv_explicit(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double lambda, double w) {
  const Eigen::Index m = a.rows(), n = a.cols();
  const Eigen::MatrixXd inner = a.transpose() * a + lambda * lambda * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd influence = a * inner.ldlt().solve(a.transpose());
  const Eigen::VectorXd r = influence * b - b;
  const double tr = (Eigen::MatrixXd::Identity(m, m) - w * influence).trace();
  return static_cast<double>(m) * r.squaredNorm() / (tr * tr);
}

// Argmin of f over n log-spaced points of [lo, hi]; `step` receives the log spacing.
template <class F>
double log_grid_argmin(F&& f, double lo, double hi, int n, double& step) {
  step = (std::log(hi) - std::log(lo)) / (n - 1);
  double best = lo, f_best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double l = std::exp(std::log(lo) + i * step);
    const double v = f(l);
    if (v < f_best) {
      f_best = v;
      best = l;
    }
  }
  return best;
}

// Diagonal system with geometrically decaying spectrum and relative noise.
struct DiagProblem {
  Eigen::MatrixXd a;
  Eigen::VectorXd x_true, b;
};

inline DiagProblem decaying_problem(Eigen::Index n, double decay, std::uint64_t seed, double noise = 0.01) {
  std::mt19937_64 rng(seed);
  DiagProblem p;
  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = std::pow(decay, static_cast<double>(i));
  p.a = s.asDiagonal();
  p.x_true = Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd clean = p.a * p.x_true;
  const Eigen::VectorXd z = random_vector(n, rng);
  p.b = clean + noise * clean.norm() * z / z.norm();
  return p;
}

// Paige-Saunders LSQR, no reorthogonalization; returns x_1 .. x_k.
// Paige-Saunders recurrence without reorthogonalization, carried in extended precision.
inline std::vector<Eigen::VectorXd> textbook_lsqr(const Eigen::MatrixXd& a_in, const Eigen::VectorXd& b_in, int iters) {
  using Real = long double;
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  const Mat a = a_in.cast<Real>();
  std::vector<Eigen::VectorXd> xs;
  Vec u = b_in.cast<Real>();
  Real beta = u.norm();
  u /= beta;
  Vec v = a.transpose() * u;
  Real alpha = v.norm();
  v /= alpha;
  Vec w = v, x = Vec::Zero(a.cols());
  Real phibar = beta, rhobar = alpha;
  for (int i = 0; i < iters; ++i) {
    u = a * v - alpha * u;
    beta = u.norm();
    u /= beta;
    v = a.transpose() * u - beta * v;
    alpha = v.norm();
    v /= alpha;
    const Real rho = std::hypot(rhobar, beta);
    const Real c = rhobar / rho, s = beta / rho;
    const Real theta = s * alpha;
    rhobar = -c * alpha;
    const Real phi = c * phibar;
    phibar = s * phibar;
    x += (phi / rho) * w;
    w = v - (theta / rho) * w;
    xs.push_back(x.cast<double>());
  }
  return xs;
}

// min ||F alpha|| subject to sum(alpha) = 1, by eliminating the last weight.
inline Eigen::VectorXd constrained_alpha(const Eigen::MatrixXd& f) {
  const Eigen::Index n = f.cols();
  Eigen::MatrixXd reduced(f.rows(), n - 1);
  for (Eigen::Index j = 0; j + 1 < n; ++j) reduced.col(j) = f.col(j) - f.col(n - 1);
  const Eigen::VectorXd head = reduced.colPivHouseholderQr().solve(-f.col(n - 1));
  Eigen::VectorXd alpha(n);
  alpha.head(n - 1) = head;
  alpha[n - 1] = 1.0 - head.sum();
  return alpha;
}

// Flips rows of R (and columns of Q) so that diag(R) is positive.
inline void normalize_signs(Eigen::MatrixXd& q, Eigen::MatrixXd& r) {
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    if (r(i, i) < 0.0) {
      r.row(i) *= -1.0;
      q.col(i) *= -1.0;
    }
  }
}

// Thin QR of a full-column-rank matrix with positive diag(R).
inline void fresh_qr(const Eigen::MatrixXd& a, Eigen::MatrixXd& q, Eigen::MatrixXd& r) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  normalize_signs(q, r);
}

}  // namespace oracle
