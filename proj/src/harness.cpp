#include "tomocal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

namespace tomocal {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty() || v[0] == '-') throw std::invalid_argument("config: bad count for " + key + ": " + v);
  return static_cast<std::size_t>(out);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("config: bad number for " + key + ": " + v);
  return out;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad flag for " + key + ": " + v);
}

std::string one_of(const std::string& key, const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (v == o) return v;
  throw std::invalid_argument("config: bad value for " + key + ": " + v);
}

// Field table: name, setter, getter.
struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define TOMOCAL_COUNT(f) \
  Field{#f, [](ExperimentConfig& c, const std::string& v) { c.f = parse_count(#f, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.f); }}
#define TOMOCAL_REAL(f) \
  Field{#f, [](ExperimentConfig& c, const std::string& v) { c.f = parse_real(#f, v); }, \
        [](const ExperimentConfig& c) { return fmt17(c.f); }}
#define TOMOCAL_FLAG(f) \
  Field{#f, [](ExperimentConfig& c, const std::string& v) { c.f = parse_flag(#f, v); }, \
        [](const ExperimentConfig& c) { return std::string(c.f ? "true" : "false"); }}
#define TOMOCAL_CHOICE(f, ...) \
  Field{#f, [](ExperimentConfig& c, const std::string& v) { c.f = one_of(#f, v, {__VA_ARGS__}); }, \
        [](const ExperimentConfig& c) { return c.f; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"name", [](ExperimentConfig& c, const std::string& v) { c.name = v; },
            [](const ExperimentConfig& c) { return c.name; }},
      TOMOCAL_COUNT(side),
      TOMOCAL_COUNT(n_views),
      TOMOCAL_COUNT(n_blocks),
      TOMOCAL_REAL(noise_level),
      TOMOCAL_COUNT(budget),
      TOMOCAL_REAL(d_lo),
      TOMOCAL_REAL(d_hi),
      TOMOCAL_REAL(d_init),
      TOMOCAL_REAL(dtheta_lo),
      TOMOCAL_REAL(dtheta_hi),
      TOMOCAL_REAL(dtheta_init),
      TOMOCAL_CHOICE(scheme, "bcd", "bcds", "abcds-1", "abcds-b", "anderson"),
      TOMOCAL_CHOICE(regularize, "none", "gcv", "wgcv"),
      TOMOCAL_REAL(w),
      TOMOCAL_COUNT(memory),
      TOMOCAL_CHOICE(nls_solver, "stencil", "golden"),
      TOMOCAL_CHOICE(active, "d", "dtheta", "both"),
      Field{"seed", [](ExperimentConfig& c, const std::string& v) { c.seed = parse_count("seed", v); },
            [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      TOMOCAL_COUNT(max_outer),
      TOMOCAL_REAL(tol),
      TOMOCAL_COUNT(max_k),
      TOMOCAL_REAL(stop_tol),
      TOMOCAL_CHOICE(coeff_mode, "standard", "paper-literal"),
      TOMOCAL_COUNT(n_det),
      TOMOCAL_REAL(det_width),
      TOMOCAL_REAL(sdd),
      TOMOCAL_FLAG(modified),
      TOMOCAL_FLAG(concurrent),
      TOMOCAL_REAL(golden_tol),
  };
  return table;
}

#undef TOMOCAL_COUNT
#undef TOMOCAL_REAL
#undef TOMOCAL_FLAG
#undef TOMOCAL_CHOICE

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += fmt17(v[i]);
  }
  return s;
}

std::filesystem::path write_meta(const ExperimentConfig& config, const Problem& problem, const OuterResult* result,
                                 const std::filesystem::path& out_dir) {
  const auto path = out_dir / (config.name + "_meta.txt");
  auto out = open_output(path);
  out << "# resolved configuration\n" << config.to_text();
  out << "# d_true ~ uniform[d_lo, d_hi] per block when d is active, else d_init\n";
  out << "# dtheta_true ~ uniform[dtheta_lo, dtheta_hi] per block when dtheta is active, else 0\n";
  out << "n_det_resolved = " << problem.ctx.det.n_det << '\n';
  out << "d_true = " << join(problem.r_true.d) << '\n';
  out << "dtheta_true = " << join(problem.r_true.dtheta) << '\n';
  if (result) {
    out << "d_final = " << join(result->r.d) << '\n';
    out << "dtheta_final = " << join(result->r.dtheta) << '\n';
  }
  check_written(out, path);
  return path;
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.emplace_back(f.key);
    return out;
  }();
  return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  throw std::invalid_argument("config: unknown key " + key);
}

std::string ExperimentConfig::to_text() const {
  std::string s;
  for (const auto& f : fields()) s += std::string(f.key) + " = " + f.get(*this) + "\n";
  return s;
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) { return from_text(text, ExperimentConfig{}); }

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  return from_file(path, ExperimentConfig{});
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), std::move(base));
}

void ExperimentConfig::validate() const {
  if (name.empty() || name.find('/') != std::string::npos) throw std::invalid_argument("config: bad name");
  if (side < 2) throw std::invalid_argument("config: side must be at least 2");
  if (n_blocks < 1 || n_blocks > n_views) throw std::invalid_argument("config: need 1 <= n_blocks <= n_views");
  if (!(noise_level >= 0.0)) throw std::invalid_argument("config: noise_level must be nonnegative");
  if (budget < 1) throw std::invalid_argument("config: budget must be at least 1");
  if (!(d_lo <= d_init && d_init <= d_hi)) throw std::invalid_argument("config: d_init outside [d_lo, d_hi]");
  if (!(dtheta_lo <= dtheta_init && dtheta_init <= dtheta_hi))
    throw std::invalid_argument("config: dtheta_init outside [dtheta_lo, dtheta_hi]");
  if (!(w > 0.0)) throw std::invalid_argument("config: w must be positive");
  if (memory < 1) throw std::invalid_argument("config: memory must be at least 1");
  if (max_k < 1) throw std::invalid_argument("config: max_k must be at least 1");
  if (nls_solver == "golden" && active == "both")
    throw std::invalid_argument("config: golden solver needs a single active parameter family");
  if (nls_solver == "golden" && scheme == "bcd" && n_blocks > 1)
    throw std::invalid_argument("config: golden solver cannot drive the joint geometry step");
  detector().validate();
}

ActiveParams ExperimentConfig::active_params() const {
  if (active == "dtheta") return ActiveParams::dtheta;
  if (active == "both") return ActiveParams::both;
  return ActiveParams::d;
}

OuterOptions ExperimentConfig::outer_options() const {
  OuterOptions o;
  o.max_outer = max_outer;
  o.tol = tol;
  o.separable = scheme != "bcd";
  o.image.max_k = max_k;
  o.image.w = w;
  o.image.stop_tol = stop_tol;
  o.image.regularize =
      regularize == "none" ? Regularization::none : (regularize == "gcv" ? Regularization::gcv : Regularization::wgcv);
  o.geometry.bounds = bounds();
  o.geometry.budget = budget;
  o.geometry.solver = nls_solver == "golden" ? NlsSolver::golden : NlsSolver::stencil;
  o.geometry.golden_tol = golden_tol;
  o.geometry.concurrent = concurrent;
  return o;
}

DetectorSpec ExperimentConfig::detector() const {
  DetectorSpec det = DetectorSpec::defaults(side);
  if (n_det > 0) det.n_det = n_det;
  det.det_width = det_width;
  det.sdd = sdd;
  return det;
}

// ---------------------------------------------------------------------------
// problem generation

Eigen::VectorXd add_noise(const Eigen::VectorXd& b, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw std::invalid_argument("add_noise: level must be nonnegative");
  if (level == 0.0) return b;
  const double bn = b.norm();
  if (bn == 0.0) throw std::invalid_argument("add_noise: cannot scale noise to a zero signal");
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(b.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(gen);
  return b + (level * bn / z.norm()) * z;
}

GeometryParams initial_geometry(const ExperimentConfig& config) {
  return GeometryParams::constant(config.n_blocks, config.d_init, config.dtheta_init, config.active_params());
}

Problem make_problem(const ExperimentConfig& config) {
  config.validate();
  Problem p;
  p.ctx.partition = make_partition(config.n_views, config.n_blocks);
  p.ctx.det = config.detector();
  p.ctx.side = config.side;

  const ImageGrid phantom = shepp_logan(config.side, config.modified);
  p.x_true = Eigen::Map<const Eigen::VectorXd>(phantom.values.data(), static_cast<Eigen::Index>(phantom.values.size()));

  const ActiveParams active = config.active_params();
  std::mt19937_64 gen(config.seed);
  std::uniform_real_distribution<double> d_dist(config.d_lo, config.d_hi);
  std::uniform_real_distribution<double> t_dist(config.dtheta_lo, config.dtheta_hi);
  p.r_true = GeometryParams::constant(config.n_blocks, config.d_init, 0.0, active);
  for (std::size_t i = 0; i < config.n_blocks; ++i) {
    if (active != ActiveParams::dtheta) p.r_true.d[i] = d_dist(gen);
    if (active != ActiveParams::d) p.r_true.dtheta[i] = t_dist(gen);
  }

  p.b_clean = assemble(p.ctx.partition, p.r_true, p.ctx.det, p.ctx.side).apply(p.x_true);
  // separate stream so the noise does not shift when geometry draws change
  p.ctx.b = add_noise(p.b_clean, config.noise_level, config.seed * 0x9E3779B97F4A7C15ULL + 1);
  return p;
}

OuterResult solve(const Problem& problem, const ExperimentConfig& config) {
  const OuterOptions opts = config.outer_options();
  const GeometryParams r0 = initial_geometry(config);
  const Reference ref{problem.x_true, problem.r_true};
  const CoeffMode coeff = config.coeff_mode == "paper-literal" ? CoeffMode::paper_literal : CoeffMode::standard;
  if (config.scheme == "bcd" || config.scheme == "bcds") return bcd(problem.ctx, r0, opts, &ref);
  if (config.scheme == "abcds-1") return abcd(problem.ctx, r0, opts, AccelMode::x_only, coeff, &ref);
  if (config.scheme == "abcds-b") return abcd(problem.ctx, r0, opts, AccelMode::both, coeff, &ref);
  if (config.scheme == "anderson") return anderson(problem.ctx, r0, config.memory, opts, &ref);
  throw std::invalid_argument("unknown scheme " + config.scheme);
}

ImageGrid to_image(const Eigen::VectorXd& x, std::size_t side) {
  if (static_cast<std::size_t>(x.size()) != side * side) throw std::invalid_argument("to_image: size mismatch");
  return {side, std::vector<double>(x.data(), x.data() + x.size())};
}

RunOutput run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  RunOutput out;
  out.config = config;
  staged("config", [&] { config.validate(); });
  out.problem = staged("make_problem", [&] { return make_problem(config); });
  out.result = staged("solve", [&] { return solve(out.problem, config); });
  staged("write_outputs", [&] {
    std::filesystem::create_directories(out_dir);
    const auto trace = out_dir / (config.name + "_trace.csv");
    const auto recon = out_dir / (config.name + "_recon.pgm");
    const auto truth = out_dir / (config.name + "_true.pgm");
    write_trace_csv(out.result.trace, trace);
    write_pgm(to_image(out.result.x, config.side), recon);
    write_pgm(to_image(out.problem.x_true, config.side), truth);
    out.files = {trace, recon, truth, write_meta(config, out.problem, &out.result, out_dir)};
  });
  return out;
}

std::vector<std::filesystem::path> simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const Problem problem = staged("make_problem", [&] { return make_problem(config); });
  return staged("write_outputs", [&] {
    std::filesystem::create_directories(out_dir);
    const auto truth = out_dir / (config.name + "_true.pgm");
    const auto sino_pgm = out_dir / (config.name + "_sinogram.pgm");
    const auto sino_csv = out_dir / (config.name + "_sinogram.csv");
    write_pgm(to_image(problem.x_true, config.side), truth);

    const auto views = static_cast<Eigen::Index>(config.n_views);
    const auto cells = static_cast<Eigen::Index>(problem.ctx.det.n_det);
    Eigen::MatrixXd sino(views, cells);
    for (Eigen::Index v = 0; v < views; ++v) sino.row(v) = problem.ctx.b.segment(v * cells, cells).transpose();
    write_pgm(sino, sino_pgm);

    auto out = open_output(sino_csv);
    for (Eigen::Index v = 0; v < views; ++v) {
      for (Eigen::Index c = 0; c < cells; ++c) out << (c ? "," : "") << fmt17(sino(v, c));
      out << '\n';
    }
    check_written(out, sino_csv);
    return std::vector<std::filesystem::path>{truth, sino_pgm, sino_csv, write_meta(config, problem, nullptr, out_dir)};
  });
}

// ---------------------------------------------------------------------------
// presets

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"exp-separability", "exp-nangles", "exp-accel", "exp-reg",
                                                 "exp-budget",       "exp-1dsolver", "exp-dtheta"};
  return names;
}

std::vector<ExperimentConfig> preset_configs(const std::string& preset) {
  std::vector<ExperimentConfig> out;
  auto variant = [&](const std::string& suffix, auto&& tweak) {
    ExperimentConfig c;
    c.name = preset + "_" + suffix;
    tweak(c);
    out.push_back(c);
  };
  if (preset == "exp-separability") {
    for (const char* scheme : {"bcds", "bcd"})
      variant(scheme, [&](ExperimentConfig& c) {
        c.scheme = scheme;
        c.budget = 1000;
      });
  } else if (preset == "exp-nangles") {
    for (std::size_t na : {5, 10, 20})
      variant("na" + std::to_string(na), [&](ExperimentConfig& c) {
        c.n_blocks = na;
        c.budget = 10;
      });
  } else if (preset == "exp-accel") {
    for (const char* scheme : {"bcds", "abcds-1", "abcds-b", "anderson"})
      variant(scheme, [&](ExperimentConfig& c) { c.scheme = scheme; });
  } else if (preset == "exp-reg") {
    for (const char* reg : {"none", "gcv", "wgcv"}) variant(reg, [&](ExperimentConfig& c) { c.regularize = reg; });
  } else if (preset == "exp-budget") {
    for (std::size_t budget : {10, 100, 1000, 10000})
      variant("budget" + std::to_string(budget), [&](ExperimentConfig& c) { c.budget = budget; });
  } else if (preset == "exp-1dsolver") {
    for (const char* solver : {"stencil", "golden"})
      variant(solver, [&](ExperimentConfig& c) { c.nls_solver = solver; });
  } else if (preset == "exp-dtheta") {
    for (const char* scheme : {"bcds", "abcds-1"})
      variant(scheme, [&](ExperimentConfig& c) {
        c.scheme = scheme;
        c.active = "both";
      });
  } else {
    throw std::invalid_argument("unknown preset " + preset);
  }
  return out;
}

std::vector<RunOutput> run_preset(const std::string& preset, const std::filesystem::path& out_dir) {
  std::vector<RunOutput> runs;
  for (const auto& config : preset_configs(preset)) runs.push_back(run_experiment(config, out_dir));
  return runs;
}

// ---------------------------------------------------------------------------
// file outputs

void write_pgm(const Eigen::MatrixXd& values, const std::filesystem::path& path) {
  if (!values.allFinite()) throw std::invalid_argument("write_pgm: non-finite values");
  const double lo = values.size() ? values.minCoeff() : 0.0;
  const double hi = values.size() ? values.maxCoeff() : 0.0;
  const double range = hi - lo;
  auto out = open_output(path);
  out << "P2\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const long q = range > 0.0 ? std::lround(255.0 * (values(r, c) - lo) / range) : 0;
      out << (c ? " " : "") << q;
    }
    out << '\n';
  }
  check_written(out, path);
}

void write_pgm(const ImageGrid& image, const std::filesystem::path& path) {
  if (image.values.size() != image.side * image.side) throw std::invalid_argument("write_pgm: malformed image");
  const auto s = static_cast<Eigen::Index>(image.side);
  Eigen::MatrixXd m(s, s);
  for (Eigen::Index r = 0; r < s; ++r)
    for (Eigen::Index c = 0; c < s; ++c) m(r, c) = image.values[static_cast<std::size_t>(r * s + c)];
  write_pgm(m, path);
}

std::string format_trace_csv(const SolveTrace& trace) {
  std::string s = "iter,rel_err_d,rel_err_dtheta,rel_err_x,secs_geometry,secs_image,objective\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); };
  for (const TraceRow& row : trace) {
    s += std::to_string(row.iter) + ',' + opt(row.rel_err_d) + ',' + opt(row.rel_err_dtheta) + ',' +
         opt(row.rel_err_x) + ',' + fmt17(row.secs_geometry) + ',' + fmt17(row.secs_image) + ',' +
         fmt17(row.objective) + '\n';
  }
  return s;
}

void write_trace_csv(const SolveTrace& trace, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << format_trace_csv(trace);
  check_written(out, path);
}

}  // namespace tomocal
