#include "tomocal/nls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tomocal {

SearchResult stencil_search_min(const Objective& f, const BoundBox& box, std::size_t budget,
                                std::optional<std::vector<double>> start) {
  const std::size_t n = box.size();
  if (n == 0) throw std::invalid_argument("stencil_search_min: empty box");
  if (budget < 1) throw std::invalid_argument("stencil_search_min: budget must be at least 1");

  std::vector<double> center = start ? std::move(*start) : box.center();
  if (center.size() != n) throw std::invalid_argument("stencil_search_min: start has wrong dimension");
  box.clip(center);

  BudgetCounter counter(budget);
  counter.try_consume();
  double fc = f(center);
  if (!std::isfinite(fc)) throw std::domain_error("stencil_search_min: objective not finite at start");

  std::vector<double> width(n);
  double max_width = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    width[i] = box.hi[i] - box.lo[i];
    max_width = std::max(max_width, width[i]);
  }

  SearchResult out;
  if (max_width == 0.0) {
    out = {center, fc, counter.used(), true};
    return out;
  }

  double scale = 0.5;
  std::vector<double> trial(n), best_trial(n);
  bool converged = false;
  while (!counter.exhausted()) {
    if (scale < 1e-6) {
      converged = true;
      break;
    }
    double f_best = fc;
    bool improved = false;
    for (std::size_t i = 0; i < n && !counter.exhausted(); ++i) {
      for (double sign : {1.0, -1.0}) {
        trial = center;
        trial[i] = std::clamp(center[i] + sign * scale * width[i], box.lo[i], box.hi[i]);
        if (trial[i] == center[i]) continue;
        if (!counter.try_consume()) break;
        const double ft = f(trial);
        if (ft < f_best) {
          f_best = ft;
          best_trial = trial;
          improved = true;
        }
      }
    }
    if (improved) {
      center = best_trial;
      fc = f_best;
    } else {
      scale *= 0.5;
    }
  }
  out.argmin = std::move(center);
  out.fmin = fc;
  out.evals = counter.used();
  out.converged = converged;
  return out;
}

SearchResult golden_parabolic_min(const std::function<double(double)>& f, double lo, double hi, double tol,
                                  std::size_t budget) {
  if (!(lo < hi)) throw std::invalid_argument("golden_parabolic_min: lo must be below hi");
  if (!(tol > 0.0)) throw std::invalid_argument("golden_parabolic_min: tol must be positive");
  if (budget < 1) throw std::invalid_argument("golden_parabolic_min: budget must be at least 1");

  const double golden = 0.5 * (3.0 - std::sqrt(5.0));
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon());
  BudgetCounter counter(budget);

  double a = lo, b = hi;
  double v = a + golden * (b - a);
  double w = v, x = v;
  double d = 0.0, e = 0.0;
  counter.try_consume();
  double fx = f(x);
  double fv = fx, fw = fx;

  bool converged = false;
  while (true) {
    const double xm = 0.5 * (a + b);
    const double tol1 = eps * std::abs(x) + tol / 3.0;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) {
      converged = true;
      break;
    }
    if (counter.exhausted()) break;

    bool golden_step = true;
    if (std::abs(e) > tol1 && std::isfinite(fx) && std::isfinite(fv) && std::isfinite(fw)) {
      // trial parabola through x, v, w
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double etemp = e;
      e = d;
      if (std::abs(p) < std::abs(0.5 * q * etemp) && p > q * (a - x) && p < q * (b - x)) {
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
        golden_step = false;
      }
    }
    if (golden_step) {
      e = x >= xm ? a - x : b - x;
      d = golden * e;
    }
    const double u = x + (std::abs(d) >= tol1 ? d : (d > 0.0 ? tol1 : -tol1));
    counter.try_consume();
    const double fu = f(u);

    if (fu <= fx) {
      if (u >= x)
        a = x;
      else
        b = x;
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x)
        a = u;
      else
        b = u;
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  return {{x}, fx, counter.used(), converged};
}

}  // namespace tomocal
