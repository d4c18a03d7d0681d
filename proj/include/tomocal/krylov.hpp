#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace tomocal {

class SparseBlockOperator;

/// Type-erased linear map with its adjoint.
struct LinearMap {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> forward;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> adjoint;
};

/// The referenced matrix/operator must outlive the map.
LinearMap as_linear_map(const Eigen::MatrixXd& a);
LinearMap as_linear_map(const SparseBlockOperator& a);

/// Golub-Kahan lower bidiagonalization state after k steps:
/// A V_k = U_{k+1} B_k with B_k of size (k+1) x k.
struct BidiagFactor {
  std::size_t k = 0;
  double beta1 = 0.0;
  std::vector<double> alpha;  // alpha_1 .. alpha_k
  std::vector<double> beta;   // beta_2 .. beta_{k+1}
  std::vector<Eigen::VectorXd> u;  // u_1 .. u_{k+1}
  std::vector<Eigen::VectorXd> v;  // v_1 .. v_k
  bool breakdown = false;

  Eigen::MatrixXd B() const;
  Eigen::MatrixXd U() const;
  Eigen::MatrixXd V() const;
};

/// u_1 = b / ||b||. Throws for b = 0.
BidiagFactor golub_kahan_init(const Eigen::VectorXd& b);

/// Appends alpha_{k+1}, v_{k+1}, beta_{k+2}, u_{k+2}. A vanishing alpha or
/// beta (below 1e-14) sets `breakdown` instead of failing; a vanishing alpha
/// leaves k unchanged. Returns false if no step was taken.
bool golub_kahan_step(const LinearMap& a, BidiagFactor& state, bool reorthogonalize = true);

/// Solves min ||B y - beta1 e_1||^2 + lambda^2 ||y||^2 as a stacked dense
/// least squares problem (minimum-norm solution when rank deficient).
Eigen::VectorXd projected_tikhonov(const Eigen::MatrixXd& B, double beta1, double lambda);

enum class Regularization { none, gcv, wgcv };

struct HybridOptions {
  std::size_t max_k = 50;
  double w = 0.8;
  Regularization regularize = Regularization::wgcv;
  double stop_tol = 1e-4;
  bool reorthogonalize = true;

  void validate() const;
};

struct HybridIterate {
  double lambda = 0.0;
  double gcv = 0.0;  // NaN when unregularized
  double residual_norm = 0.0;
};

struct HybridResult {
  Eigen::VectorXd x;
  std::vector<HybridIterate> trace;
  BidiagFactor factor;
  bool breakdown = false;
};

/// LSQR projected onto growing Krylov subspaces with Tikhonov regularization
/// of the projected problem. lambda_k is chosen each step by (weighted) GCV on
/// B_k over [1e-6 sigma_max(B_k), sigma_max(B_k)]. Iteration stops when
/// |G_k - G_{k-1}| <= stop_tol * G_1 for three consecutive steps, at max_k,
/// or on breakdown. With `Regularization::none` this is plain LSQR.
HybridResult hybrid_lsqr(const LinearMap& a, const Eigen::VectorXd& b, const HybridOptions& opts);

}  // namespace tomocal
