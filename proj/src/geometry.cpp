#include "tomocal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tomocal {

AngleBlockPartition make_partition(std::size_t n_views, std::size_t n_blocks) {
  std::vector<double> angles(n_views);
  for (std::size_t v = 0; v < n_views; ++v) angles[v] = static_cast<double>(v);
  return make_partition(std::move(angles), n_blocks);
}

AngleBlockPartition make_partition(std::vector<double> view_angles, std::size_t n_blocks) {
  const std::size_t n_views = view_angles.size();
  if (n_views == 0 || n_blocks == 0) throw std::invalid_argument("make_partition: counts must be positive");
  if (n_blocks > n_views) throw std::invalid_argument("make_partition: more blocks than views");

  AngleBlockPartition p;
  p.n_views = n_views;
  p.n_blocks = n_blocks;
  p.view_angles = std::move(view_angles);
  p.block_of_view.resize(n_views);
  for (std::size_t i = 0; i < n_blocks; ++i)
    for (std::size_t v = p.block_begin(i); v < p.block_end(i); ++v) p.block_of_view[v] = i;
  return p;
}

std::size_t AngleBlockPartition::block_begin(std::size_t block) const {
  return block * n_views / n_blocks;
}

std::size_t AngleBlockPartition::block_end(std::size_t block) const {
  return (block + 1) * n_views / n_blocks;
}

BoundBox::BoundBox(std::vector<double> lo_, std::vector<double> hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw std::invalid_argument("BoundBox: lo/hi size mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) throw std::invalid_argument("BoundBox: lo > hi");
}

bool BoundBox::contains(std::span<const double> p) const {
  if (p.size() != lo.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  return true;
}

std::vector<double> BoundBox::center() const {
  std::vector<double> c(lo.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

void BoundBox::clip(std::span<double> p) const {
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
}

std::size_t unknowns_per_block(ActiveParams active) {
  return active == ActiveParams::both ? 2 : 1;
}

BoundBox GeometryBounds::block_box(ActiveParams active) const {
  switch (active) {
    case ActiveParams::d: return BoundBox({d_lo}, {d_hi});
    case ActiveParams::dtheta: return BoundBox({dtheta_lo}, {dtheta_hi});
    case ActiveParams::both: return BoundBox({d_lo, dtheta_lo}, {d_hi, dtheta_hi});
  }
  throw std::logic_error("unreachable");
}

BoundBox GeometryBounds::full_box(ActiveParams active, std::size_t n_blocks) const {
  const BoundBox one = block_box(active);
  std::vector<double> lo, hi;
  for (std::size_t i = 0; i < n_blocks; ++i) {
    lo.insert(lo.end(), one.lo.begin(), one.lo.end());
    hi.insert(hi.end(), one.hi.begin(), one.hi.end());
  }
  return BoundBox(std::move(lo), std::move(hi));
}

GeometryParams GeometryParams::constant(std::size_t n_blocks, double d, double dtheta, ActiveParams active) {
  GeometryParams r;
  r.d.assign(n_blocks, d);
  r.dtheta.assign(n_blocks, dtheta);
  r.active = active;
  return r;
}

std::vector<double> GeometryParams::block_unknowns(std::size_t block) const {
  switch (active) {
    case ActiveParams::d: return {d.at(block)};
    case ActiveParams::dtheta: return {dtheta.at(block)};
    case ActiveParams::both: return {d.at(block), dtheta.at(block)};
  }
  throw std::logic_error("unreachable");
}

void GeometryParams::set_block_unknowns(std::size_t block, std::span<const double> values) {
  if (values.size() != unknowns_per_block(active))
    throw std::invalid_argument("set_block_unknowns: wrong number of values");
  switch (active) {
    case ActiveParams::d: d.at(block) = values[0]; break;
    case ActiveParams::dtheta: dtheta.at(block) = values[0]; break;
    case ActiveParams::both:
      d.at(block) = values[0];
      dtheta.at(block) = values[1];
      break;
  }
}

std::vector<double> GeometryParams::pack() const {
  std::vector<double> out;
  out.reserve(n_blocks() * unknowns_per_block(active));
  for (std::size_t i = 0; i < n_blocks(); ++i) {
    auto u = block_unknowns(i);
    out.insert(out.end(), u.begin(), u.end());
  }
  return out;
}

void GeometryParams::unpack(std::span<const double> packed) {
  const std::size_t per = unknowns_per_block(active);
  if (packed.size() != per * n_blocks()) throw std::invalid_argument("unpack: wrong length");
  for (std::size_t i = 0; i < n_blocks(); ++i) set_block_unknowns(i, packed.subspan(i * per, per));
}

bool GeometryParams::within(const GeometryBounds& bounds) const {
  if (d.size() != dtheta.size()) return false;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] < bounds.d_lo || d[i] > bounds.d_hi) return false;
    if (dtheta[i] < bounds.dtheta_lo || dtheta[i] > bounds.dtheta_hi) return false;
  }
  return true;
}

void GeometryParams::clip_to(const GeometryBounds& bounds) {
  for (auto& v : d) v = std::clamp(v, bounds.d_lo, bounds.d_hi);
  for (auto& v : dtheta) v = std::clamp(v, bounds.dtheta_lo, bounds.dtheta_hi);
}

double relative_error(std::span<const double> p, std::span<const double> p_true) {
  if (p.size() != p_true.size()) throw std::invalid_argument("relative_error: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    num += (p[i] - p_true[i]) * (p[i] - p_true[i]);
    den += p_true[i] * p_true[i];
  }
  if (den == 0.0) throw std::domain_error("relative_error: reference vector has zero norm");
  return std::sqrt(num / den);
}

}  // namespace tomocal
