#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

namespace tomocal {

/// Thin SVD, A = U diag(sigma) V^T with p = min(m, n) columns.
struct SvdTriple {
  Eigen::MatrixXd U;
  Eigen::VectorXd sigma;  // nonincreasing
  Eigen::MatrixXd V;

  Eigen::Index rows() const { return U.rows(); }
  Eigen::Index rank_bound() const { return sigma.size(); }
};

/// Filter factors phi_i in [0, 1], one per singular value.
struct FilterSpectrum {
  Eigen::VectorXd phi;
};

SvdTriple svd(const Eigen::MatrixXd& a);

/// phi_i = sigma_i^2 / (sigma_i^2 + lambda^2). Zero singular values always get
/// phi_i = 0; they carry no information.
FilterSpectrum tikhonov_filter(const Eigen::VectorXd& sigma, double lambda);

/// phi_i = 1 for the k largest singular values, 0 otherwise.
FilterSpectrum tsvd_filter(const Eigen::VectorXd& sigma, std::size_t k);

/// x = sum_i phi_i (u_i^T b / sigma_i) v_i, skipping sigma_i = 0.
Eigen::VectorXd filtered_solve(const SvdTriple& s, const Eigen::VectorXd& b, const FilterSpectrum& filter);

/// Weighted GCV function for Tikhonov filtering,
///
///   G(w, lambda) = m ||A x_reg - b||^2 / trace(I_m - w A A_F^+)^2,
///
/// evaluated in the SVD basis. The residual includes the component of b
/// outside range(U) and the trace includes the m - p rows without singular
/// values, so rectangular problems are handled. Returns +inf when the
/// denominator vanishes (square, unfiltered, w = 1).
double gcv_value(const SvdTriple& s, const Eigen::VectorXd& b, double lambda, double w = 1.0);

struct LambdaBracket {
  double lo;
  double hi;
};

/// Default search range [1e-6 * smallest positive sigma, sigma_1].
LambdaBracket default_gcv_bracket(const Eigen::VectorXd& sigma);

/// argmin of gcv_value over the bracket, located with golden_parabolic_min
/// applied to log(lambda) (tolerance 1e-6 in log lambda).
double minimize_gcv(const SvdTriple& s, const Eigen::VectorXd& b, double w = 1.0,
                    std::optional<LambdaBracket> bracket = std::nullopt);

}  // namespace tomocal
