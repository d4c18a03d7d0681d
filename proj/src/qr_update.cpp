#include "tomocal/qr_update.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tomocal {

bool QrFactor::append_column(const Eigen::VectorXd& col) {
  if (rows_ == 0 && cols() == 0) rows_ = col.size();
  if (col.size() != rows_) throw std::invalid_argument("QrFactor: column has wrong length");
  const Eigen::Index k = cols();
  if (k >= rows_) return false;

  Eigen::VectorXd q = col;
  Eigen::VectorXd r = Eigen::VectorXd::Zero(k + 1);
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double c = Q_.col(j).dot(q);
      r[j] += c;
      q -= c * Q_.col(j);
    }
  }
  const double norm = q.norm();
  const double col_norm = col.norm();
  if (col_norm == 0.0 || norm < 1e-14 * col_norm) return false;
  r[k] = norm;

  Q_.conservativeResize(rows_, k + 1);
  Q_.col(k) = q / norm;
  Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(k + 1, k + 1);
  grown.topLeftCorner(k, k) = R_;
  grown.col(k) = r;
  R_ = std::move(grown);
  return true;
}

void QrFactor::drop_first_column() {
  const Eigen::Index k = cols();
  if (k == 0) throw std::logic_error("QrFactor: no column to drop");
  // R(:, 2:k) is upper Hessenberg; rotate rows (j, j+1) to clear R(j+1, j).
  Eigen::MatrixXd H = R_.rightCols(k - 1);
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    const double a = H(j, j), b = H(j + 1, j);
    const double rho = std::hypot(a, b);
    if (rho == 0.0) continue;
    const double c = a / rho, s = b / rho;
    for (Eigen::Index col = j; col < k - 1; ++col) {
      const double top = H(j, col), bot = H(j + 1, col);
      H(j, col) = c * top + s * bot;
      H(j + 1, col) = -s * top + c * bot;
    }
    H(j + 1, j) = 0.0;
    for (Eigen::Index row = 0; row < rows_; ++row) {
      const double left = Q_(row, j), right = Q_(row, j + 1);
      Q_(row, j) = c * left + s * right;
      Q_(row, j + 1) = -s * left + c * right;
    }
  }
  R_ = H.topRows(k - 1);
  Q_.conservativeResize(rows_, k - 1);
}

double QrFactor::condition_estimate() const {
  if (cols() == 0) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd d = R_.diagonal().cwiseAbs();
  const double lo = d.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return d.maxCoeff() / lo;
}

Eigen::VectorXd QrFactor::solve_least_squares(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != rows_) throw std::invalid_argument("QrFactor: rhs has wrong length");
  if (cols() == 0) return {};
  return R_.triangularView<Eigen::Upper>().solve(Q_.transpose() * rhs);
}

AndersonMixer::AndersonMixer(std::size_t memory, double max_condition)
    : memory_(memory), max_condition_(max_condition) {
  if (memory < 1) throw std::invalid_argument("AndersonMixer: memory must be at least 1");
}

void AndersonMixer::drop_oldest() {
  qr_.drop_first_column();
  dg_.pop_front();
}

Eigen::VectorXd AndersonMixer::update(const Eigen::VectorXd& x, const Eigen::VectorXd& gx) {
  if (x.size() != gx.size()) throw std::invalid_argument("AndersonMixer: size mismatch");
  const Eigen::VectorXd f = gx - x;
  if (!has_prev_) {
    qr_ = QrFactor(x.size());
    has_prev_ = true;
    f_prev_ = f;
    g_prev_ = gx;
    gamma_.resize(0);
    return gx;
  }

  if (window_size() == memory_) drop_oldest();
  const Eigen::VectorXd df = f - f_prev_;
  if (qr_.append_column(df)) {
    dg_.push_back(gx - g_prev_);
  } else {
    // new difference is (numerically) dependent: restart the window from it
    while (window_size() > 0) drop_oldest();
    if (qr_.append_column(df)) dg_.push_back(gx - g_prev_);
  }
  while (window_size() > 1 && qr_.condition_estimate() > max_condition_) drop_oldest();

  f_prev_ = f;
  g_prev_ = gx;

  Eigen::VectorXd next = gx;
  if (window_size() == 0) {
    gamma_.resize(0);
    return next;
  }
  gamma_ = qr_.solve_least_squares(f);
  for (std::size_t j = 0; j < dg_.size(); ++j) next -= gamma_[static_cast<Eigen::Index>(j)] * dg_[j];
  return next;
}

Eigen::VectorXd anderson_alpha_from_gamma(const Eigen::VectorXd& gamma) {
  const Eigen::Index m = gamma.size();
  Eigen::VectorXd alpha(m + 1);
  if (m == 0) {
    alpha[0] = 1.0;
    return alpha;
  }
  alpha[0] = gamma[0];
  for (Eigen::Index i = 1; i < m; ++i) alpha[i] = gamma[i] - gamma[i - 1];
  alpha[m] = 1.0 - gamma[m - 1];
  return alpha;
}

AndersonRun anderson_accelerate(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g, Eigen::VectorXd x0,
                                std::size_t memory, std::size_t max_iter, double tol) {
  AndersonMixer mixer(memory);
  AndersonRun run;
  run.x = std::move(x0);
  for (std::size_t k = 0; k < max_iter; ++k) {
    const Eigen::VectorXd gx = g(run.x);
    const double res = (gx - run.x).norm();
    run.residual_norms.push_back(res);
    if (res <= tol) break;
    run.x = mixer.update(run.x, gx);
    ++run.iterations;
  }
  return run;
}

}  // namespace tomocal
