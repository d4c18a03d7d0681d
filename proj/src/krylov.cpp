#include "tomocal/krylov.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tomocal/direct_reg.hpp"
#include "tomocal/projector.hpp"

namespace tomocal {

namespace {

constexpr double kBreakdown = 1e-14;

// Two passes of classical Gram-Schmidt against the stored basis.
void orthogonalize_against(Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) x -= q.dot(x) * q;
}

}  // namespace

LinearMap as_linear_map(const Eigen::MatrixXd& a) {
  return {a.rows(), a.cols(), [&a](const Eigen::VectorXd& x) -> Eigen::VectorXd { return a * x; },
          [&a](const Eigen::VectorXd& y) -> Eigen::VectorXd { return a.transpose() * y; }};
}

LinearMap as_linear_map(const SparseBlockOperator& a) {
  return {static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()),
          [&a](const Eigen::VectorXd& x) { return a.apply(x); },
          [&a](const Eigen::VectorXd& y) { return a.apply_adjoint(y); }};
}

Eigen::MatrixXd BidiagFactor::B() const {
  const auto k_ = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k_ + 1, k_);
  for (Eigen::Index i = 0; i < k_; ++i) {
    b(i, i) = alpha[static_cast<std::size_t>(i)];
    b(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  return b;
}

Eigen::MatrixXd BidiagFactor::U() const {
  if (u.empty()) return {};
  Eigen::MatrixXd m(u.front().size(), static_cast<Eigen::Index>(u.size()));
  for (std::size_t j = 0; j < u.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = u[j];
  return m;
}

Eigen::MatrixXd BidiagFactor::V() const {
  if (v.empty()) return {};
  Eigen::MatrixXd m(v.front().size(), static_cast<Eigen::Index>(v.size()));
  for (std::size_t j = 0; j < v.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = v[j];
  return m;
}

BidiagFactor golub_kahan_init(const Eigen::VectorXd& b) {
  BidiagFactor s;
  s.beta1 = b.norm();
  if (s.beta1 == 0.0) throw std::invalid_argument("golub_kahan: right-hand side is zero");
  s.u.push_back(b / s.beta1);
  return s;
}

bool golub_kahan_step(const LinearMap& a, BidiagFactor& s, bool reorth) {
  if (s.breakdown || s.u.empty()) return false;
  const Eigen::VectorXd& u_last = s.u.back();
  if (u_last.size() != a.rows) throw std::invalid_argument("golub_kahan_step: dimension mismatch");

  Eigen::VectorXd v = a.adjoint(u_last);
  if (!s.v.empty()) v -= s.beta.back() * s.v.back();
  if (reorth) orthogonalize_against(v, s.v);
  const double alpha = v.norm();
  if (alpha < kBreakdown) {
    s.breakdown = true;
    return false;
  }
  v /= alpha;

  Eigen::VectorXd u = a.forward(v) - alpha * u_last;
  if (reorth) orthogonalize_against(u, s.u);
  const double beta = u.norm();

  s.alpha.push_back(alpha);
  s.v.push_back(std::move(v));
  s.beta.push_back(beta);
  if (beta < kBreakdown) {
    s.breakdown = true;
    // keep U with k+1 columns; the last one never contributes since beta ~ 0
    u.setZero();
  } else {
    u /= beta;
  }
  s.u.push_back(std::move(u));
  ++s.k;
  return true;
}

Eigen::VectorXd projected_tikhonov(const Eigen::MatrixXd& B, double beta1, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("projected_tikhonov: lambda must be nonnegative");
  const Eigen::Index rows = B.rows(), k = B.cols();
  Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(rows + k, k);
  stacked.topRows(rows) = B;
  stacked.bottomRows(k).diagonal().setConstant(lambda);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows + k);
  rhs[0] = beta1;
  return stacked.completeOrthogonalDecomposition().solve(rhs);
}

void HybridOptions::validate() const {
  if (max_k < 1) throw std::invalid_argument("HybridOptions: max_k must be at least 1");
  if (!(stop_tol > 0.0)) throw std::invalid_argument("HybridOptions: stop_tol must be positive");
  if (!(w > 0.0)) throw std::invalid_argument("HybridOptions: w must be positive");
}

HybridResult hybrid_lsqr(const LinearMap& a, const Eigen::VectorXd& b, const HybridOptions& opts) {
  opts.validate();
  if (b.size() != a.rows) throw std::invalid_argument("hybrid_lsqr: dimension mismatch");
  if (b.norm() == 0.0) throw std::invalid_argument("hybrid_lsqr: right-hand side is zero");

  HybridResult out;
  out.factor = golub_kahan_init(b);
  out.x = Eigen::VectorXd::Zero(a.cols);
  const double w = opts.regularize == Regularization::wgcv ? opts.w : 1.0;

  std::size_t flat_steps = 0;
  double g_first = 0.0;
  for (std::size_t it = 0; it < opts.max_k; ++it) {
    if (!golub_kahan_step(a, out.factor, opts.reorthogonalize)) break;
    const BidiagFactor& f = out.factor;
    const Eigen::MatrixXd B = f.B();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(B.rows());
    rhs[0] = f.beta1;

    HybridIterate step;
    step.gcv = std::numeric_limits<double>::quiet_NaN();
    if (opts.regularize != Regularization::none) {
      const SvdTriple sb = svd(B);
      const double smax = sb.sigma[0];
      step.lambda = minimize_gcv(sb, rhs, w, LambdaBracket{1e-6 * smax, smax});
      step.gcv = gcv_value(sb, rhs, step.lambda, w);
    }
    const Eigen::VectorXd y = projected_tikhonov(B, f.beta1, step.lambda);
    step.residual_norm = (B * y - rhs).norm();
    out.x = f.V() * y;
    out.trace.push_back(step);

    if (opts.regularize != Regularization::none) {
      const std::size_t n = out.trace.size();
      if (n == 1) {
        g_first = step.gcv;
      } else {
        const double change = std::abs(step.gcv - out.trace[n - 2].gcv);
        flat_steps = change <= opts.stop_tol * g_first ? flat_steps + 1 : 0;
        if (flat_steps >= 3) break;
      }
    }
    if (f.breakdown) break;
  }
  out.breakdown = out.factor.breakdown;
  return out;
}

}  // namespace tomocal
