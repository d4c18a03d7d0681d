#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace tomocal {

/// Thin QR factors of a tall matrix that grows on the right and shrinks on
/// the left, as needed for a sliding window of columns.
class QrFactor {
 public:
  QrFactor() = default;
  explicit QrFactor(Eigen::Index rows) : rows_(rows) {}

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return R_.cols(); }
  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& R() const { return R_; }

  /// Modified Gram-Schmidt with one reorthogonalization pass. Returns false,
  /// leaving the factors untouched, when the column is numerically in the
  /// span of the current ones (new diagonal < 1e-14 ||col||).
  bool append_column(const Eigen::VectorXd& col);

  /// Removes the leftmost column; the Hessenberg remainder is restored to
  /// triangular form with Givens rotations.
  void drop_first_column();

  /// max |R_ii| / min |R_ii|, infinity for an empty or singular factor.
  double condition_estimate() const;

  /// argmin_g ||rhs - Q R g|| via Q^T and a triangular solve.
  Eigen::VectorXd solve_least_squares(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::Index rows_ = 0;
  Eigen::MatrixXd Q_;
  Eigen::MatrixXd R_;
};

/// Type-II Anderson mixing in the unconstrained difference form:
///
///   gamma = argmin || f_k - dF gamma ||,  x_{k+1} = g(x_k) - dG gamma,
///
/// with f = g(x) - x and dF, dG the windows of consecutive differences
/// (at most m columns). dF is kept as an updated QR factorization.
class AndersonMixer {
 public:
  explicit AndersonMixer(std::size_t memory, double max_condition = 1e12);

  /// Takes the current iterate x_k and its image g(x_k), returns x_{k+1}.
  Eigen::VectorXd update(const Eigen::VectorXd& x, const Eigen::VectorXd& gx);

  std::size_t window_size() const { return static_cast<std::size_t>(qr_.cols()); }
  const Eigen::VectorXd& last_gamma() const { return gamma_; }
  const QrFactor& factor() const { return qr_; }

 private:
  void drop_oldest();

  std::size_t memory_;
  double max_condition_;
  QrFactor qr_;
  std::deque<Eigen::VectorXd> dg_;
  Eigen::VectorXd f_prev_, g_prev_;
  Eigen::VectorXd gamma_;
  bool has_prev_ = false;
};

/// Mixing weights alpha (summing to one) for the residual columns
/// f_{k-m_k}, ..., f_k from the difference coefficients gamma.
Eigen::VectorXd anderson_alpha_from_gamma(const Eigen::VectorXd& gamma);

struct AndersonRun {
  Eigen::VectorXd x;
  std::size_t iterations = 0;
  std::vector<double> residual_norms;  // ||g(x_k) - x_k||
};

/// Runs x_1 = g(x_0), then Anderson-mixed iterations until
/// ||g(x_k) - x_k|| <= tol or max_iter evaluations of g.
AndersonRun anderson_accelerate(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g, Eigen::VectorXd x0,
                                std::size_t memory, std::size_t max_iter, double tol = 0.0);

}  // namespace tomocal
