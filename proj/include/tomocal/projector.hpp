#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tomocal/geometry.hpp"

namespace tomocal {

/// Flat, equispaced detector rigidly mounted opposite the source.
struct DetectorSpec {
  std::size_t n_det = 0;
  double det_width = 7.2;  // image half-width units
  double sdd = 4.0;        // source-to-detector distance

  /// ceil(sqrt(2) * side) cells over a width that keeps the unit disk in
  /// view for every d >= 1.5.
  static DetectorSpec defaults(std::size_t side);
  void validate() const;
};

struct Point2 {
  double x;
  double y;
};

/// Exact ray/pixel intersection lengths on the [-1,1]^2 grid (Siddon).
/// `visit(pixel_index, length)` is called once per crossed pixel in ray order.
class RayTracer {
 public:
  explicit RayTracer(std::size_t side);

  template <class Visit>
  void trace(Point2 from, Point2 to, Visit&& visit);

  std::size_t side() const { return side_; }

 private:
  std::size_t side_;
  double pixel_;
  std::vector<double> ax_, ay_;
};

/// Source and detector-cell endpoints of one ray. Angles in degrees.
struct RayEndpoints {
  Point2 source;
  Point2 cell;
};
RayEndpoints fan_ray(double view_angle_deg, double d, double dtheta_deg, std::size_t cell, const DetectorSpec& det);

/// One row block in compressed-row form.
struct SparseRowBlock {
  std::vector<std::size_t> row_offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> weights;

  std::size_t n_rows() const { return row_offsets.size() - 1; }
  std::size_t nnz() const { return weights.size(); }
  bool operator==(const SparseRowBlock&) const = default;
};

class SparseBlockOperator {
 public:
  SparseBlockOperator() = default;
  SparseBlockOperator(std::vector<SparseRowBlock> blocks, std::size_t n_cols, std::size_t rows_per_view);

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }
  std::size_t rows_per_view() const { return rows_per_view_; }
  const std::vector<SparseRowBlock>& blocks() const { return blocks_; }
  std::size_t block_row_offset(std::size_t block) const { return block_offsets_.at(block); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const;
  double frobenius_norm() const;
  Eigen::MatrixXd to_dense() const;

  bool operator==(const SparseBlockOperator&) const = default;

 private:
  std::vector<SparseRowBlock> blocks_;
  std::vector<std::size_t> block_offsets_;
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::size_t rows_per_view_ = 0;
};

SparseRowBlock build_block(const AngleBlockPartition& partition, std::size_t block, double d, double dtheta,
                           const DetectorSpec& det, std::size_t side);

SparseBlockOperator assemble(const AngleBlockPartition& partition, const GeometryParams& r, const DetectorSpec& det,
                             std::size_t side);

/// ||A_i(d, dtheta) x - b_i||^2 traced on the fly, without storing the block.
/// `b_block` holds only the rows of block i.
double block_residual_sq(const AngleBlockPartition& partition, std::size_t block, double d, double dtheta,
                         const DetectorSpec& det, std::size_t side, const Eigen::VectorXd& x,
                         const Eigen::Ref<const Eigen::VectorXd>& b_block);

// ---------------------------------------------------------------------------

template <class Visit>
void RayTracer::trace(Point2 from, Point2 to, Visit&& visit) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  const double len = std::sqrt(dx * dx + dy * dy);
  if (len == 0.0) return;

  double amin = 0.0, amax = 1.0;
  if (dx != 0.0) {
    const double a0 = (-1.0 - from.x) / dx, a1 = (1.0 - from.x) / dx;
    amin = std::max(amin, std::min(a0, a1));
    amax = std::min(amax, std::max(a0, a1));
  } else if (from.x <= -1.0 || from.x >= 1.0) {
    return;
  }
  if (dy != 0.0) {
    const double a0 = (-1.0 - from.y) / dy, a1 = (1.0 - from.y) / dy;
    amin = std::max(amin, std::min(a0, a1));
    amax = std::min(amax, std::max(a0, a1));
  } else if (from.y <= -1.0 || from.y >= 1.0) {
    return;
  }
  if (amin >= amax) return;

  // plane crossings strictly inside (amin, amax), each list ascending in alpha
  ax_.clear();
  ay_.clear();
  if (dx != 0.0) {
    for (std::size_t i = 0; i <= side_; ++i) {
      const std::size_t k = dx > 0.0 ? i : side_ - i;
      const double a = (-1.0 + static_cast<double>(k) * pixel_ - from.x) / dx;
      if (a > amin && a < amax) ax_.push_back(a);
    }
  }
  if (dy != 0.0) {
    for (std::size_t j = 0; j <= side_; ++j) {
      const std::size_t k = dy > 0.0 ? j : side_ - j;
      const double a = (-1.0 + static_cast<double>(k) * pixel_ - from.y) / dy;
      if (a > amin && a < amax) ay_.push_back(a);
    }
  }

  const auto n = static_cast<std::ptrdiff_t>(side_);
  auto emit = [&](double a0, double a1) {
    if (a1 - a0 <= 1e-14) return;
    const double am = 0.5 * (a0 + a1);
    const double px = from.x + am * dx;
    const double py = from.y + am * dy;
    auto col = static_cast<std::ptrdiff_t>(std::floor((px + 1.0) / pixel_));
    auto row = static_cast<std::ptrdiff_t>(std::floor((1.0 - py) / pixel_));
    col = std::clamp<std::ptrdiff_t>(col, 0, n - 1);
    row = std::clamp<std::ptrdiff_t>(row, 0, n - 1);
    visit(static_cast<std::size_t>(row * n + col), (a1 - a0) * len);
  };

  double prev = amin;
  std::size_t i = 0, j = 0;
  while (i < ax_.size() || j < ay_.size()) {
    double next;
    if (j >= ay_.size() || (i < ax_.size() && ax_[i] <= ay_[j]))
      next = ax_[i++];
    else
      next = ay_[j++];
    emit(prev, next);
    prev = next;
  }
  emit(prev, amax);
}

}  // namespace tomocal
