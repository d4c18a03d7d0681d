#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tomocal {

/// Contiguous grouping of projection views into angle blocks. All views in a
/// block share one set of geometry parameters.
struct AngleBlockPartition {
  std::size_t n_views = 0;
  std::size_t n_blocks = 0;
  std::vector<double> view_angles;  // degrees
  std::vector<std::size_t> block_of_view;

  // block i covers views [floor(i*n_views/n_blocks), floor((i+1)*n_views/n_blocks))
  std::size_t block_begin(std::size_t block) const;
  std::size_t block_end(std::size_t block) const;
  std::size_t block_size(std::size_t block) const { return block_end(block) - block_begin(block); }
};

/// Views get nominal angles 0, 1, ..., n_views-1 degrees.
AngleBlockPartition make_partition(std::size_t n_views, std::size_t n_blocks);
AngleBlockPartition make_partition(std::vector<double> view_angles, std::size_t n_blocks);

struct BoundBox {
  std::vector<double> lo;
  std::vector<double> hi;

  BoundBox() = default;
  BoundBox(std::vector<double> lo_, std::vector<double> hi_);

  std::size_t size() const { return lo.size(); }
  bool contains(std::span<const double> p) const;
  std::vector<double> center() const;
  void clip(std::span<double> p) const;
};

enum class ActiveParams { d, dtheta, both };

/// Number of unknowns each block contributes.
std::size_t unknowns_per_block(ActiveParams active);

struct GeometryBounds {
  double d_lo = 1.5;
  double d_hi = 2.5;
  double dtheta_lo = -0.5;
  double dtheta_hi = 0.5;

  BoundBox block_box(ActiveParams active) const;
  BoundBox full_box(ActiveParams active, std::size_t n_blocks) const;
};

/// Per-block source-to-object distances (image half-width units) and angle
/// offsets (degrees). Only the families flagged in `active` are unknowns;
/// the packed unknown vector interleaves them block by block.
struct GeometryParams {
  std::vector<double> d;
  std::vector<double> dtheta;
  ActiveParams active = ActiveParams::d;

  static GeometryParams constant(std::size_t n_blocks, double d, double dtheta, ActiveParams active);

  std::size_t n_blocks() const { return d.size(); }

  std::vector<double> block_unknowns(std::size_t block) const;
  void set_block_unknowns(std::size_t block, std::span<const double> values);

  std::vector<double> pack() const;
  void unpack(std::span<const double> packed);

  bool within(const GeometryBounds& bounds) const;
  void clip_to(const GeometryBounds& bounds);

  bool operator==(const GeometryParams&) const = default;
};

/// ||p - p_true|| / ||p_true||.
double relative_error(std::span<const double> p, std::span<const double> p_true);

}  // namespace tomocal
