#include "tomocal/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tomocal {

namespace {

constexpr std::array<Ellipse, 10> make_table(const std::array<double, 10>& intensity) {
  return {{
      {intensity[0], 0.69, 0.92, 0.0, 0.0, 0.0},
      {intensity[1], 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {intensity[2], 0.11, 0.31, 0.22, 0.0, -18.0},
      {intensity[3], 0.16, 0.41, -0.22, 0.0, 18.0},
      {intensity[4], 0.21, 0.25, 0.0, 0.35, 0.0},
      {intensity[5], 0.046, 0.046, 0.0, 0.1, 0.0},
      {intensity[6], 0.046, 0.046, 0.0, -0.1, 0.0},
      {intensity[7], 0.046, 0.023, -0.08, -0.605, 0.0},
      {intensity[8], 0.023, 0.023, 0.0, -0.606, 0.0},
      {intensity[9], 0.023, 0.046, 0.06, -0.605, 0.0},
  }};
}

constexpr auto kStandard = make_table({2.0, -0.98, -0.02, -0.02, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01});
constexpr auto kModified = make_table({1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1});

}  // namespace

const std::array<Ellipse, 10>& shepp_logan_ellipses(bool modified) {
  return modified ? kModified : kStandard;
}

ImageGrid shepp_logan(std::size_t side, bool modified) {
  if (side < 2) throw std::invalid_argument("shepp_logan: side must be at least 2");
  const auto& table = shepp_logan_ellipses(modified);

  ImageGrid img;
  img.side = side;
  img.values.assign(side * side, 0.0);
  for (const Ellipse& e : table) {
    const double phi = e.phi_deg * std::numbers::pi / 180.0;
    const double c = std::cos(phi), s = std::sin(phi);
    for (std::size_t row = 0; row < side; ++row) {
      const double y = img.y_center(row) - e.y0;
      for (std::size_t col = 0; col < side; ++col) {
        const double x = img.x_center(col) - e.x0;
        const double xr = x * c + y * s;
        const double yr = -x * s + y * c;
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) img.at(row, col) += e.intensity;
      }
    }
  }
  for (double& v : img.values) v = std::max(v, 0.0);
  return img;
}

}  // namespace tomocal
