#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tomocal/geometry.hpp"
#include "tomocal/krylov.hpp"
#include "tomocal/projector.hpp"

namespace tomocal {

/// Fixed acquisition setup plus measured data.
struct ProblemContext {
  AngleBlockPartition partition;
  DetectorSpec det;
  std::size_t side = 0;
  Eigen::VectorXd b;

  std::size_t n_pixels() const { return side * side; }
  Eigen::Index block_row_begin(std::size_t block) const;
  Eigen::Index block_rows(std::size_t block) const;
};

enum class NlsSolver { stencil, golden };

struct GeometryOptions {
  GeometryBounds bounds;
  std::size_t budget = 100;  // objective evaluations per solver call
  NlsSolver solver = NlsSolver::stencil;
  double golden_tol = 1e-4;
  bool concurrent = false;  // solve blocks on worker threads
};

struct OuterOptions {
  std::size_t max_outer = 20;
  double tol = 1e-4;  // relative change in x; 0 disables the test
  bool separable = true;
  HybridOptions image;
  GeometryOptions geometry;
};

/// Ground truth, used only for the error columns of the trace.
struct Reference {
  Eigen::VectorXd x_true;
  GeometryParams r_true;
};

struct TraceRow {
  std::size_t iter = 0;
  std::optional<double> rel_err_d;
  std::optional<double> rel_err_dtheta;
  std::optional<double> rel_err_x;
  double secs_geometry = 0.0;
  double secs_image = 0.0;
  double objective = 0.0;  // ||A(r_k) x_k - b||

  bool operator==(const TraceRow&) const = default;
};

using SolveTrace = std::vector<TraceRow>;

struct OuterResult {
  Eigen::VectorXd x;
  GeometryParams r;
  SolveTrace trace;
};

struct ImageStepResult {
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// Regularized image for fixed geometry: hybrid LSQR on A(r).
ImageStepResult image_step(const ProblemContext& ctx, const GeometryParams& r, const HybridOptions& opts);

/// Per-block geometry update: block i minimizes ||A_i(r_i) x - b_i||^2 over
/// its own 1 or 2 parameters, starting from `r_start`'s block values.
GeometryParams geometry_step_separable(const ProblemContext& ctx, const Eigen::VectorXd& x,
                                       const GeometryParams& r_start, const GeometryOptions& opts);

/// Same objective minimized over all blocks at once with one stencil search.
GeometryParams geometry_step_joint(const ProblemContext& ctx, const Eigen::VectorXd& x, const GeometryParams& r_start,
                                   const GeometryOptions& opts);

/// ||A(r) x - b||.
double data_misfit(const ProblemContext& ctx, const GeometryParams& r, const Eigen::VectorXd& x);

/// g(x) = image_step(geometry_step(x)). Keeps the most recent geometry as the
/// warm start for the next call and records the timings of each call.
class FixedPointMap {
 public:
  FixedPointMap(const ProblemContext& ctx, GeometryParams r_start, const OuterOptions& opts);

  Eigen::VectorXd operator()(const Eigen::VectorXd& x);

  const GeometryParams& geometry() const { return r_; }
  double last_secs_geometry() const { return secs_geometry_; }
  double last_secs_image() const { return secs_image_; }
  double last_objective() const { return objective_; }

 private:
  const ProblemContext& ctx_;
  GeometryParams r_;
  OuterOptions opts_;
  double secs_geometry_ = 0.0;
  double secs_image_ = 0.0;
  double objective_ = 0.0;
};

/// Alternating minimization: geometry step (separable or joint), then image step.
OuterResult bcd(const ProblemContext& ctx, const GeometryParams& r0, const OuterOptions& opts,
                const Reference* ref = nullptr);

enum class AccelMode { x_only, both };

/// How the momentum step combines w~_k and w~_{k-1}:
///   standard:      w_k = w~_k     + ((t_{k-1} - 1) / t_k) (w~_k - w~_{k-1})
///   paper_literal: w_k = w~_{k-1} + (t_{k-1} / t_k)       (w~_k - w~_{k-1})
enum class CoeffMode { standard, paper_literal };

/// t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2.
double next_momentum(double t_prev);

/// Momentum extrapolation of one block of variables.
Eigen::VectorXd extrapolate(const Eigen::VectorXd& current, const Eigen::VectorXd& previous, double t_prev, double t,
                            CoeffMode mode);

/// Accelerated BCD with separable geometry steps. In x_only mode the geometry
/// iterate is taken as computed; in both mode it is extrapolated as well and
/// clipped to the bounds.
OuterResult abcd(const ProblemContext& ctx, const GeometryParams& r0, const OuterOptions& opts, AccelMode mode,
                 CoeffMode coeff = CoeffMode::standard, const Reference* ref = nullptr);

/// Anderson-accelerated fixed-point iteration x_{k+1} = g(x_k) with memory m.
OuterResult anderson(const ProblemContext& ctx, const GeometryParams& r0, std::size_t memory,
                     const OuterOptions& opts, const Reference* ref = nullptr);

}  // namespace tomocal
