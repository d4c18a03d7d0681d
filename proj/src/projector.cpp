#include "tomocal/projector.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tomocal {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

void check_source_outside(double d, const DetectorSpec& det) {
  if (!(d > std::numbers::sqrt2)) throw std::domain_error("projector: source lies inside the image square (d <= sqrt(2))");
  if (!(d < det.sdd)) throw std::domain_error("projector: source-to-object distance must be below sdd");
}

template <class RowVisit>
void for_each_block_ray(const AngleBlockPartition& partition, std::size_t block, double d, double dtheta,
                        const DetectorSpec& det, RowVisit&& row_visit) {
  if (block >= partition.n_blocks) throw std::out_of_range("projector: block index out of range");
  check_source_outside(d, det);
  for (std::size_t v = partition.block_begin(block); v < partition.block_end(block); ++v)
    for (std::size_t c = 0; c < det.n_det; ++c) row_visit(fan_ray(partition.view_angles[v], d, dtheta, c, det));
}

}  // namespace

DetectorSpec DetectorSpec::defaults(std::size_t side) {
  DetectorSpec det;
  det.n_det = static_cast<std::size_t>(std::ceil(std::numbers::sqrt2 * static_cast<double>(side)));
  return det;
}

void DetectorSpec::validate() const {
  if (n_det < 1) throw std::invalid_argument("DetectorSpec: n_det must be >= 1");
  if (!(det_width > 0.0)) throw std::invalid_argument("DetectorSpec: det_width must be positive");
  if (!(sdd > 0.0)) throw std::invalid_argument("DetectorSpec: sdd must be positive");
}

RayTracer::RayTracer(std::size_t side) : side_(side), pixel_(2.0 / static_cast<double>(side)) {
  if (side < 1) throw std::invalid_argument("RayTracer: empty grid");
  ax_.reserve(side + 1);
  ay_.reserve(side + 1);
}

RayEndpoints fan_ray(double view_angle_deg, double d, double dtheta_deg, std::size_t cell, const DetectorSpec& det) {
  const double phi = (view_angle_deg + dtheta_deg) * kDegToRad;
  const double c = std::cos(phi), s = std::sin(phi);
  const Point2 src{d * c, d * s};
  // detector center sits sdd along the central ray; its axis is orthogonal to it
  const double center = d - det.sdd;
  const double pitch = det.det_width / static_cast<double>(det.n_det);
  const double offset = (static_cast<double>(cell) + 0.5) * pitch - 0.5 * det.det_width;
  return {src, {center * c - offset * s, center * s + offset * c}};
}

SparseBlockOperator::SparseBlockOperator(std::vector<SparseRowBlock> blocks, std::size_t n_cols,
                                         std::size_t rows_per_view)
    : blocks_(std::move(blocks)), n_cols_(n_cols), rows_per_view_(rows_per_view) {
  block_offsets_.reserve(blocks_.size());
  for (const auto& b : blocks_) {
    block_offsets_.push_back(n_rows_);
    n_rows_ += b.n_rows();
  }
}

Eigen::VectorXd SparseBlockOperator::apply(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != n_cols_) throw std::invalid_argument("apply: dimension mismatch");
  Eigen::VectorXd y(static_cast<Eigen::Index>(n_rows_));
  Eigen::Index out = 0;
  for (const auto& b : blocks_) {
    for (std::size_t r = 0; r < b.n_rows(); ++r) {
      double s = 0.0;
      for (std::size_t k = b.row_offsets[r]; k < b.row_offsets[r + 1]; ++k) s += b.weights[k] * x[b.cols[k]];
      y[out++] = s;
    }
  }
  return y;
}

Eigen::VectorXd SparseBlockOperator::apply_adjoint(const Eigen::VectorXd& y) const {
  if (static_cast<std::size_t>(y.size()) != n_rows_) throw std::invalid_argument("apply_adjoint: dimension mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_cols_));
  Eigen::Index in = 0;
  for (const auto& b : blocks_) {
    for (std::size_t r = 0; r < b.n_rows(); ++r) {
      const double v = y[in++];
      if (v == 0.0) continue;
      for (std::size_t k = b.row_offsets[r]; k < b.row_offsets[r + 1]; ++k) x[b.cols[k]] += b.weights[k] * v;
    }
  }
  return x;
}

double SparseBlockOperator::frobenius_norm() const {
  double s = 0.0;
  for (const auto& b : blocks_)
    for (double w : b.weights) s += w * w;
  return std::sqrt(s);
}

Eigen::MatrixXd SparseBlockOperator::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows_), static_cast<Eigen::Index>(n_cols_));
  Eigen::Index row = 0;
  for (const auto& b : blocks_) {
    for (std::size_t r = 0; r < b.n_rows(); ++r, ++row)
      for (std::size_t k = b.row_offsets[r]; k < b.row_offsets[r + 1]; ++k) m(row, b.cols[k]) += b.weights[k];
  }
  return m;
}

SparseRowBlock build_block(const AngleBlockPartition& partition, std::size_t block, double d, double dtheta,
                           const DetectorSpec& det, std::size_t side) {
  if (side < 2) throw std::invalid_argument("build_block: side must be at least 2");
  det.validate();
  RayTracer tracer(side);
  SparseRowBlock out;
  out.row_offsets.reserve(partition.block_size(block) * det.n_det + 1);
  for_each_block_ray(partition, block, d, dtheta, det, [&](const RayEndpoints& ray) {
    tracer.trace(ray.source, ray.cell, [&](std::size_t idx, double len) {
      out.cols.push_back(static_cast<std::uint32_t>(idx));
      out.weights.push_back(len);
    });
    out.row_offsets.push_back(out.weights.size());
  });
  return out;
}

SparseBlockOperator assemble(const AngleBlockPartition& partition, const GeometryParams& r, const DetectorSpec& det,
                             std::size_t side) {
  if (r.n_blocks() != partition.n_blocks || r.dtheta.size() != partition.n_blocks)
    throw std::invalid_argument("assemble: geometry does not match partition");
  std::vector<SparseRowBlock> blocks;
  blocks.reserve(partition.n_blocks);
  for (std::size_t i = 0; i < partition.n_blocks; ++i)
    blocks.push_back(build_block(partition, i, r.d[i], r.dtheta[i], det, side));
  return SparseBlockOperator(std::move(blocks), side * side, det.n_det);
}

double block_residual_sq(const AngleBlockPartition& partition, std::size_t block, double d, double dtheta,
                         const DetectorSpec& det, std::size_t side, const Eigen::VectorXd& x,
                         const Eigen::Ref<const Eigen::VectorXd>& b_block) {
  if (static_cast<std::size_t>(x.size()) != side * side)
    throw std::invalid_argument("block_residual_sq: image size mismatch");
  if (static_cast<std::size_t>(b_block.size()) != partition.block_size(block) * det.n_det)
    throw std::invalid_argument("block_residual_sq: data size mismatch");
  thread_local RayTracer tracer(side);
  if (tracer.side() != side) tracer = RayTracer(side);
  double total = 0.0;
  Eigen::Index row = 0;
  for_each_block_ray(partition, block, d, dtheta, det, [&](const RayEndpoints& ray) {
    double s = 0.0;
    tracer.trace(ray.source, ray.cell, [&](std::size_t idx, double len) { s += len * x[static_cast<Eigen::Index>(idx)]; });
    const double diff = s - b_block[row++];
    total += diff * diff;
  });
  return total;
}

}  // namespace tomocal
