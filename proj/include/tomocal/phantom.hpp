#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace tomocal {

/// Square image on [-1,1]^2, row-major. Row 0 is the top (y near +1),
/// column 0 the left edge (x near -1).
struct ImageGrid {
  std::size_t side = 0;
  std::vector<double> values;

  double pixel_size() const { return 2.0 / static_cast<double>(side); }
  double x_center(std::size_t col) const { return -1.0 + (static_cast<double>(col) + 0.5) * pixel_size(); }
  double y_center(std::size_t row) const { return 1.0 - (static_cast<double>(row) + 0.5) * pixel_size(); }
  double& at(std::size_t row, std::size_t col) { return values[row * side + col]; }
  double at(std::size_t row, std::size_t col) const { return values[row * side + col]; }
};

struct Ellipse {
  double intensity;
  double a;  // horizontal semi-axis
  double b;  // vertical semi-axis
  double x0;
  double y0;
  double phi_deg;  // counter-clockwise rotation
};

/// The ten-ellipse Shepp-Logan table; `modified` selects the higher-contrast
/// intensities commonly used for display.
const std::array<Ellipse, 10>& shepp_logan_ellipses(bool modified = false);

ImageGrid shepp_logan(std::size_t side, bool modified = false);

}  // namespace tomocal
