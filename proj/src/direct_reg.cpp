#include "tomocal/direct_reg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "tomocal/nls.hpp"

namespace tomocal {

namespace {

// The parts of the GCV function that do not depend on lambda.
struct GcvModel {
  Eigen::VectorXd sigma;
  Eigen::VectorXd bhat;
  double perp_sq = 0.0;
  double m = 0.0;
  double extra_rows = 0.0;

  GcvModel(const SvdTriple& s, const Eigen::VectorXd& b) : sigma(s.sigma) {
    if (b.size() != s.U.rows()) throw std::invalid_argument("gcv: dimension mismatch");
    bhat = s.U.transpose() * b;
    perp_sq = std::max(0.0, (b - s.U * bhat).squaredNorm());
    m = static_cast<double>(s.U.rows());
    extra_rows = static_cast<double>(s.U.rows() - s.sigma.size());
  }

  double operator()(double lambda, double w) const {
    // 1 - phi formed directly; subtracting loses everything when lambda << sigma
    const double l2 = lambda * lambda;
    double resid = perp_sq;
    double trace = extra_rows;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      const double s2 = sigma[i] * sigma[i];
      const double comp = s2 > 0.0 ? l2 / (s2 + l2) : 1.0;
      const double keep = comp * bhat[i];
      resid += keep * keep;
      trace += (1.0 - w) + w * comp;
    }
    if (trace == 0.0) return std::numeric_limits<double>::infinity();
    return m * resid / (trace * trace);
  }
};

void check_weight(double w) {
  if (!(w > 0.0)) throw std::invalid_argument("gcv: weight must be positive");
}

}  // namespace

SvdTriple svd(const Eigen::MatrixXd& a) {
  if (!a.allFinite()) throw std::domain_error("svd: non-finite input");
  Eigen::JacobiSVD<Eigen::MatrixXd> jsvd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {jsvd.matrixU(), jsvd.singularValues(), jsvd.matrixV()};
}

FilterSpectrum tikhonov_filter(const Eigen::VectorXd& sigma, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("tikhonov_filter: lambda must be nonnegative");
  FilterSpectrum f{Eigen::VectorXd(sigma.size())};
  const double l2 = lambda * lambda;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const double s2 = sigma[i] * sigma[i];
    f.phi[i] = s2 == 0.0 ? 0.0 : s2 / (s2 + l2);
  }
  return f;
}

FilterSpectrum tsvd_filter(const Eigen::VectorXd& sigma, std::size_t k) {
  if (k > static_cast<std::size_t>(sigma.size())) throw std::out_of_range("tsvd_filter: k exceeds number of singular values");
  FilterSpectrum f{Eigen::VectorXd::Zero(sigma.size())};
  f.phi.head(static_cast<Eigen::Index>(k)).setOnes();
  return f;
}

Eigen::VectorXd filtered_solve(const SvdTriple& s, const Eigen::VectorXd& b, const FilterSpectrum& filter) {
  if (b.size() != s.U.rows() || filter.phi.size() != s.sigma.size())
    throw std::invalid_argument("filtered_solve: dimension mismatch");
  Eigen::VectorXd coeff = s.U.transpose() * b;
  for (Eigen::Index i = 0; i < coeff.size(); ++i)
    coeff[i] = s.sigma[i] == 0.0 ? 0.0 : filter.phi[i] * coeff[i] / s.sigma[i];
  return s.V * coeff;
}

double gcv_value(const SvdTriple& s, const Eigen::VectorXd& b, double lambda, double w) {
  check_weight(w);
  if (!(lambda >= 0.0)) throw std::invalid_argument("gcv_value: lambda must be nonnegative");
  return GcvModel(s, b)(lambda, w);
}

LambdaBracket default_gcv_bracket(const Eigen::VectorXd& sigma) {
  double smallest = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > 0.0) smallest = sigma[i];
  if (smallest == 0.0) throw std::domain_error("minimize_gcv: no positive singular values");
  return {1e-6 * smallest, sigma[0]};
}

double minimize_gcv(const SvdTriple& s, const Eigen::VectorXd& b, double w, std::optional<LambdaBracket> bracket) {
  check_weight(w);
  const LambdaBracket br = bracket ? *bracket : default_gcv_bracket(s.sigma);
  if (!(br.lo > 0.0) || !(br.lo < br.hi)) throw std::invalid_argument("minimize_gcv: invalid bracket");
  const GcvModel model(s, b);
  // G is often multimodal in log(lambda); a coarse scan picks the basin, Brent refines it
  constexpr int kScan = 400;
  const double t_lo = std::log(br.lo), t_hi = std::log(br.hi);
  const double h = (t_hi - t_lo) / (kScan - 1);
  int best_i = 0;
  double g_best = model(br.lo, w);
  for (int i = 1; i < kScan; ++i) {
    const double g = model(i == kScan - 1 ? br.hi : std::exp(t_lo + i * h), w);
    if (g < g_best) {
      g_best = g;
      best_i = i;
    }
  }
  double best = best_i == 0 ? br.lo : best_i == kScan - 1 ? br.hi : std::exp(t_lo + best_i * h);
  const double a = t_lo + std::max(best_i - 1, 0) * h;
  const double c = t_lo + std::min(best_i + 1, kScan - 1) * h;
  const SearchResult res = golden_parabolic_min([&](double t) { return model(std::exp(t), w); }, a, c, 1e-8, 500);
  if (res.fmin < g_best) best = std::exp(res.argmin[0]);
  return best;
}

}  // namespace tomocal
