#include "tomocal/outer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "tomocal/nls.hpp"
#include "tomocal/qr_update.hpp"

namespace tomocal {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

TraceRow make_row(std::size_t iter, const GeometryParams& r, const Eigen::VectorXd& x, const Reference* ref) {
  TraceRow row;
  row.iter = iter;
  if (!ref) return row;
  if (r.active != ActiveParams::dtheta) row.rel_err_d = relative_error(r.d, ref->r_true.d);
  if (r.active != ActiveParams::d) row.rel_err_dtheta = relative_error(r.dtheta, ref->r_true.dtheta);
  const auto xs = to_std(x), xt = to_std(ref->x_true);
  row.rel_err_x = relative_error(xs, xt);
  return row;
}

double relative_change(const Eigen::VectorXd& x, const Eigen::VectorXd& prev) {
  const double den = prev.norm();
  return den == 0.0 ? (x.norm() == 0.0 ? 0.0 : 1.0) : (x - prev).norm() / den;
}

SearchResult solve_block(const ProblemContext& ctx, std::size_t block, const Eigen::VectorXd& x,
                         const GeometryParams& r_start, const GeometryOptions& opts) {
  const auto rows = ctx.b.segment(ctx.block_row_begin(block), ctx.block_rows(block));
  const ActiveParams active = r_start.active;
  const double d0 = r_start.d[block], t0 = r_start.dtheta[block];
  auto eval = [&](double d, double t) {
    return block_residual_sq(ctx.partition, block, d, t, ctx.det, ctx.side, x, rows);
  };
  auto residual = [&](std::span<const double> p) {
    switch (active) {
      case ActiveParams::d: return eval(p[0], t0);
      case ActiveParams::dtheta: return eval(d0, p[0]);
      case ActiveParams::both: return eval(p[0], p[1]);
    }
    throw std::logic_error("unreachable");
  };
  const BoundBox box = opts.bounds.block_box(active);

  if (opts.solver == NlsSolver::golden) {
    if (box.size() != 1) throw std::invalid_argument("golden solver handles one parameter per block only");
    auto scalar = [&](double v) { return active == ActiveParams::d ? eval(v, t0) : eval(d0, v); };
    return golden_parabolic_min(scalar, box.lo[0], box.hi[0], opts.golden_tol, opts.budget);
  }
  return stencil_search_min(residual, box, opts.budget, r_start.block_unknowns(block));
}

}  // namespace

Eigen::Index ProblemContext::block_row_begin(std::size_t block) const {
  return static_cast<Eigen::Index>(partition.block_begin(block) * det.n_det);
}

Eigen::Index ProblemContext::block_rows(std::size_t block) const {
  return static_cast<Eigen::Index>(partition.block_size(block) * det.n_det);
}

ImageStepResult image_step(const ProblemContext& ctx, const GeometryParams& r, const HybridOptions& opts) {
  const SparseBlockOperator a = assemble(ctx.partition, r, ctx.det, ctx.side);
  if (static_cast<std::size_t>(ctx.b.size()) != a.rows()) throw std::invalid_argument("image_step: data size mismatch");
  ImageStepResult out;
  if (ctx.b.norm() == 0.0) {
    out.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a.cols()));
    return out;
  }
  out.x = hybrid_lsqr(as_linear_map(a), ctx.b, opts).x;
  out.objective = (a.apply(out.x) - ctx.b).norm();
  return out;
}

double data_misfit(const ProblemContext& ctx, const GeometryParams& r, const Eigen::VectorXd& x) {
  return (assemble(ctx.partition, r, ctx.det, ctx.side).apply(x) - ctx.b).norm();
}

GeometryParams geometry_step_separable(const ProblemContext& ctx, const Eigen::VectorXd& x,
                                       const GeometryParams& r_start, const GeometryOptions& opts) {
  const std::size_t n_blocks = ctx.partition.n_blocks;
  if (r_start.n_blocks() != n_blocks) throw std::invalid_argument("geometry_step: geometry does not match partition");
  std::vector<SearchResult> results(n_blocks);

  if (opts.concurrent && n_blocks > 1) {
    const std::size_t n_threads =
        std::min<std::size_t>(n_blocks, std::max(2u, std::thread::hardware_concurrency()));
    std::vector<std::exception_ptr> errors(n_threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < n_blocks; i += n_threads) results[i] = solve_block(ctx, i, x, r_start, opts);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (std::size_t i = 0; i < n_blocks; ++i) results[i] = solve_block(ctx, i, x, r_start, opts);
  }

  GeometryParams r = r_start;
  for (std::size_t i = 0; i < n_blocks; ++i) r.set_block_unknowns(i, results[i].argmin);
  return r;
}

GeometryParams geometry_step_joint(const ProblemContext& ctx, const Eigen::VectorXd& x, const GeometryParams& r_start,
                                   const GeometryOptions& opts) {
  const std::size_t n_blocks = ctx.partition.n_blocks;
  if (r_start.n_blocks() != n_blocks) throw std::invalid_argument("geometry_step: geometry does not match partition");
  GeometryParams trial = r_start;
  auto objective = [&](std::span<const double> packed) {
    trial.unpack(packed);
    double total = 0.0;
    for (std::size_t i = 0; i < n_blocks; ++i) {
      const auto rows = ctx.b.segment(ctx.block_row_begin(i), ctx.block_rows(i));
      total += block_residual_sq(ctx.partition, i, trial.d[i], trial.dtheta[i], ctx.det, ctx.side, x, rows);
    }
    return total;
  };
  const SearchResult res =
      stencil_search_min(objective, opts.bounds.full_box(r_start.active, n_blocks), opts.budget, r_start.pack());
  GeometryParams r = r_start;
  r.unpack(res.argmin);
  return r;
}

FixedPointMap::FixedPointMap(const ProblemContext& ctx, GeometryParams r_start, const OuterOptions& opts)
    : ctx_(ctx), r_(std::move(r_start)), opts_(opts) {}

Eigen::VectorXd FixedPointMap::operator()(const Eigen::VectorXd& x) {
  auto t0 = Clock::now();
  r_ = opts_.separable ? geometry_step_separable(ctx_, x, r_, opts_.geometry)
                       : geometry_step_joint(ctx_, x, r_, opts_.geometry);
  secs_geometry_ = seconds_since(t0);
  t0 = Clock::now();
  ImageStepResult img = image_step(ctx_, r_, opts_.image);
  secs_image_ = seconds_since(t0);
  objective_ = img.objective;
  return std::move(img.x);
}

OuterResult bcd(const ProblemContext& ctx, const GeometryParams& r0, const OuterOptions& opts, const Reference* ref) {
  if (!r0.within(opts.geometry.bounds)) throw std::invalid_argument("bcd: initial geometry outside bounds");
  OuterResult out;
  auto t0 = Clock::now();
  ImageStepResult img = image_step(ctx, r0, opts.image);
  TraceRow row0 = make_row(0, r0, img.x, ref);
  row0.secs_image = seconds_since(t0);
  row0.objective = img.objective;
  out.trace.push_back(row0);
  out.x = std::move(img.x);

  FixedPointMap g(ctx, r0, opts);
  for (std::size_t k = 1; k <= opts.max_outer; ++k) {
    Eigen::VectorXd x = g(out.x);
    TraceRow row = make_row(k, g.geometry(), x, ref);
    row.secs_geometry = g.last_secs_geometry();
    row.secs_image = g.last_secs_image();
    row.objective = g.last_objective();
    out.trace.push_back(row);
    const double change = relative_change(x, out.x);
    out.x = std::move(x);
    if (opts.tol > 0.0 && change < opts.tol) break;
  }
  out.r = g.geometry();
  return out;
}

double next_momentum(double t_prev) { return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev)); }

Eigen::VectorXd extrapolate(const Eigen::VectorXd& current, const Eigen::VectorXd& previous, double t_prev, double t,
                            CoeffMode mode) {
  switch (mode) {
    case CoeffMode::standard: return current + ((t_prev - 1.0) / t) * (current - previous);
    case CoeffMode::paper_literal: return previous + (t_prev / t) * (current - previous);
  }
  throw std::logic_error("unreachable");
}

OuterResult abcd(const ProblemContext& ctx, const GeometryParams& r0, const OuterOptions& opts, AccelMode mode,
                 CoeffMode coeff, const Reference* ref) {
  if (!r0.within(opts.geometry.bounds)) throw std::invalid_argument("abcd: initial geometry outside bounds");
  OuterResult out;
  auto t0 = Clock::now();
  ImageStepResult img = image_step(ctx, r0, opts.image);
  TraceRow row0 = make_row(0, r0, img.x, ref);
  row0.secs_image = seconds_since(t0);
  row0.objective = img.objective;
  out.trace.push_back(row0);

  // w~_{k-1} and w_{k-1}
  Eigen::VectorXd x_tilde_prev = img.x;
  GeometryParams r_tilde_prev = r0;
  Eigen::VectorXd x = img.x;
  GeometryParams r = r0;
  double t_prev = 1.0;

  for (std::size_t k = 1; k <= opts.max_outer; ++k) {
    t0 = Clock::now();
    const GeometryParams r_tilde = geometry_step_separable(ctx, x, r, opts.geometry);
    const double secs_geometry = seconds_since(t0);
    t0 = Clock::now();
    const ImageStepResult step = image_step(ctx, r_tilde, opts.image);
    const double secs_image = seconds_since(t0);

    const double t = next_momentum(t_prev);
    Eigen::VectorXd x_next = extrapolate(step.x, x_tilde_prev, t_prev, t, coeff);
    GeometryParams r_next = r_tilde;
    if (mode == AccelMode::both) {
      const auto cur = r_tilde.pack(), prev = r_tilde_prev.pack();
      const Eigen::VectorXd moved =
          extrapolate(Eigen::Map<const Eigen::VectorXd>(cur.data(), static_cast<Eigen::Index>(cur.size())),
                      Eigen::Map<const Eigen::VectorXd>(prev.data(), static_cast<Eigen::Index>(prev.size())), t_prev,
                      t, coeff);
      r_next.unpack(std::span<const double>(moved.data(), static_cast<std::size_t>(moved.size())));
      r_next.clip_to(opts.geometry.bounds);
    }

    TraceRow row = make_row(k, r_next, x_next, ref);
    row.secs_geometry = secs_geometry;
    row.secs_image = secs_image;
    row.objective = data_misfit(ctx, r_next, x_next);
    out.trace.push_back(row);

    const double change = relative_change(x_next, x);
    x_tilde_prev = step.x;
    r_tilde_prev = r_tilde;
    x = std::move(x_next);
    r = std::move(r_next);
    t_prev = t;
    if (opts.tol > 0.0 && change < opts.tol) break;
  }
  out.x = std::move(x);
  out.r = std::move(r);
  return out;
}

OuterResult anderson(const ProblemContext& ctx, const GeometryParams& r0, std::size_t memory,
                     const OuterOptions& opts, const Reference* ref) {
  if (!r0.within(opts.geometry.bounds)) throw std::invalid_argument("anderson: initial geometry outside bounds");
  AndersonMixer mixer(memory);
  OuterResult out;
  auto t0 = Clock::now();
  ImageStepResult img = image_step(ctx, r0, opts.image);
  TraceRow row0 = make_row(0, r0, img.x, ref);
  row0.secs_image = seconds_since(t0);
  row0.objective = img.objective;
  out.trace.push_back(row0);
  out.x = std::move(img.x);

  OuterOptions sep = opts;
  sep.separable = true;
  FixedPointMap g(ctx, r0, sep);
  for (std::size_t k = 1; k <= opts.max_outer; ++k) {
    const Eigen::VectorXd gx = g(out.x);
    Eigen::VectorXd x = mixer.update(out.x, gx);
    TraceRow row = make_row(k, g.geometry(), x, ref);
    row.secs_geometry = g.last_secs_geometry();
    row.secs_image = g.last_secs_image();
    row.objective = data_misfit(ctx, g.geometry(), x);
    out.trace.push_back(row);
    const double change = relative_change(x, out.x);
    out.x = std::move(x);
    if (opts.tol > 0.0 && change < opts.tol) break;
  }
  out.r = g.geometry();
  return out;
}

}  // namespace tomocal
