#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tomocal/outer.hpp"
#include "tomocal/phantom.hpp"

namespace tomocal {

/// Failure tagged with the pipeline stage it came from.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct ExperimentConfig {
  std::string name = "run";
  std::size_t side = 32;
  std::size_t n_views = 360;
  std::size_t n_blocks = 10;
  double noise_level = 0.01;
  std::size_t budget = 100;
  double d_lo = 1.5;
  double d_hi = 2.5;
  double d_init = 2.0;
  double dtheta_lo = -0.5;
  double dtheta_hi = 0.5;
  double dtheta_init = 0.0;
  std::string scheme = "bcds";  // bcd | bcds | abcds-1 | abcds-b | anderson
  std::string regularize = "wgcv";  // none | gcv | wgcv
  double w = 0.8;
  std::size_t memory = 5;
  std::string nls_solver = "stencil";  // stencil | golden
  std::string active = "d";  // d | dtheta | both
  std::uint64_t seed = 1;
  std::size_t max_outer = 20;
  double tol = 0.0;
  std::size_t max_k = 50;
  double stop_tol = 1e-4;
  std::string coeff_mode = "standard";  // standard | paper-literal
  std::size_t n_det = 0;  // 0: ceil(sqrt(2) * side)
  double det_width = 7.2;
  double sdd = 4.0;
  bool modified = false;
  bool concurrent = false;
  double golden_tol = 1e-4;

  /// Applies one `key = value` assignment; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  /// Resolved configuration as `key = value` lines in a fixed order.
  std::string to_text() const;

  static const std::vector<std::string>& keys();
  /// Values not mentioned in the text keep their defaults (or `base`).
  static ExperimentConfig from_text(const std::string& text);
  static ExperimentConfig from_text(const std::string& text, ExperimentConfig base);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  static ExperimentConfig from_file(const std::filesystem::path& path, ExperimentConfig base);

  GeometryBounds bounds() const { return {d_lo, d_hi, dtheta_lo, dtheta_hi}; }
  ActiveParams active_params() const;
  OuterOptions outer_options() const;
  DetectorSpec detector() const;
};

struct Problem {
  ProblemContext ctx;
  Eigen::VectorXd x_true;
  GeometryParams r_true;
  Eigen::VectorXd b_clean;
};

/// b + eta with eta = level ||b|| z / ||z||, z standard normal from `seed`.
Eigen::VectorXd add_noise(const Eigen::VectorXd& b, double level, std::uint64_t seed);

/// Shepp-Logan image, random per-block geometry drawn uniformly inside the
/// bounds for each active family (inactive families stay at their initial
/// value), clean and noisy sinograms.
Problem make_problem(const ExperimentConfig& config);

GeometryParams initial_geometry(const ExperimentConfig& config);

/// Dispatches to the configured scheme.
OuterResult solve(const Problem& problem, const ExperimentConfig& config);

struct RunOutput {
  ExperimentConfig config;
  Problem problem;
  OuterResult result;
  std::vector<std::filesystem::path> files;
};

/// make_problem + solve + outputs `<name>_trace.csv`, `<name>_recon.pgm`,
/// `<name>_true.pgm` and `<name>_meta.txt` in `out_dir`.
RunOutput run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Writes `<name>_true.pgm`, `<name>_sinogram.pgm`, `<name>_sinogram.csv`
/// (one view per line) and `<name>_meta.txt`.
std::vector<std::filesystem::path> simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir);

const std::vector<std::string>& preset_names();
/// Configurations making up a preset, named `<preset>_<variant>`.
std::vector<ExperimentConfig> preset_configs(const std::string& preset);
std::vector<RunOutput> run_preset(const std::string& preset, const std::filesystem::path& out_dir);

ImageGrid to_image(const Eigen::VectorXd& x, std::size_t side);

/// ASCII "P2" graymap, maxval 255, values mapped linearly from [min, max].
void write_pgm(const ImageGrid& image, const std::filesystem::path& path);
void write_pgm(const Eigen::MatrixXd& values, const std::filesystem::path& path);

/// Header `iter,rel_err_d,rel_err_dtheta,rel_err_x,secs_geometry,secs_image,objective`,
/// 17 significant digits, empty fields for absent errors.
void write_trace_csv(const SolveTrace& trace, const std::filesystem::path& path);
std::string format_trace_csv(const SolveTrace& trace);

}  // namespace tomocal
