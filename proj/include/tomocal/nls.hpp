#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tomocal/geometry.hpp"

namespace tomocal {

/// Hard cap on objective evaluations for one solver call.
class BudgetCounter {
 public:
  explicit BudgetCounter(std::size_t budget) : budget_(budget) {}

  bool exhausted() const { return used_ >= budget_; }
  /// Reserves one evaluation; false once the budget is spent.
  bool try_consume() {
    if (exhausted()) return false;
    ++used_;
    return true;
  }
  std::size_t budget() const { return budget_; }
  std::size_t used() const { return used_; }

 private:
  std::size_t budget_;
  std::size_t used_ = 0;
};

struct SearchResult {
  std::vector<double> argmin;
  double fmin = 0.0;
  std::size_t evals = 0;
  bool converged = false;  // true: tolerance reached; false: budget ran out
};

using Objective = std::function<double(std::span<const double>)>;

/// Coordinate-stencil search with scale halving, the sampling core of
/// implicit filtering. Starting from `start` (box center if absent), the
/// +-h stencil is evaluated along each coordinate with h = 2^-j (hi - lo),
/// j = 1, 2, ...; the best strict improvement becomes the new center,
/// otherwise h is halved. Stops when the budget is spent or
/// h < 1e-6 (hi - lo). Stencil points are clipped to the box.
SearchResult stencil_search_min(const Objective& f, const BoundBox& box, std::size_t budget,
                                std::optional<std::vector<double>> start = std::nullopt);

/// Bounded scalar minimization by golden section with parabolic
/// interpolation (Brent). Returns once the bracket around the minimizer is
/// within `tol` or the budget is spent.
SearchResult golden_parabolic_min(const std::function<double(double)>& f, double lo, double hi, double tol,
                                  std::size_t budget);

}  // namespace tomocal
