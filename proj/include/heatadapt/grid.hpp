#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "heatadapt/errors.hpp"

namespace heatadapt {

/// Uniform spatial mesh over the rectangle [0, x_max] x [0, y_max].
/// `nx` and `ny` count steps, so a line along Ox holds nx + 1 nodes.
struct SpatialGrid {
  double hx = 0.0;
  double hy = 0.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x_max = 0.0;
  double y_max = 0.0;

  double x(std::size_t k) const { return static_cast<double>(k) * hx; }
  double y(std::size_t q) const { return static_cast<double>(q) * hy; }
};

struct TimeGrid {
  double tau = 0.0;
  std::size_t n_steps = 0;
  double t_max = 0.0;
};

namespace detail {

inline void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw InvalidArgument(std::string(field) + " must be finite and > 0");
}

}  // namespace detail

inline SpatialGrid build_spatial_grid(double x_max, double y_max, std::size_t nx, std::size_t ny) {
  detail::require_positive(x_max, "x_max");
  detail::require_positive(y_max, "y_max");
  if (nx < 3) throw InvalidArgument("nx must be >= 3");
  if (ny < 3) throw InvalidArgument("ny must be >= 3");
  return SpatialGrid{x_max / static_cast<double>(nx), y_max / static_cast<double>(ny), nx, ny, x_max, y_max};
}

inline TimeGrid build_time_grid(double t_max, std::size_t n_steps) {
  detail::require_positive(t_max, "t_max");
  if (n_steps < 1) throw InvalidArgument("n_steps must be >= 1");
  return TimeGrid{t_max / static_cast<double>(n_steps), n_steps, t_max};
}

inline std::pair<SpatialGrid, TimeGrid> build_grids(double x_max, double y_max, double t_max, std::size_t nx,
                                                    std::size_t ny, std::size_t n_steps) {
  return {build_spatial_grid(x_max, y_max, nx, ny), build_time_grid(t_max, n_steps)};
}

/// Overload for counts that arrive as floating point (config files, CLI). Non-integral counts are rejected.
inline std::pair<SpatialGrid, TimeGrid> build_grids(double x_max, double y_max, double t_max, double nx, double ny,
                                                    double n_steps) {
  auto count = [](double v, const char* field) {
    if (!std::isfinite(v) || v < 0.0 || std::floor(v) != v)
      throw InvalidArgument(std::string(field) + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
  };
  return build_grids(x_max, y_max, t_max, count(nx, "nx"), count(ny, "ny"), count(n_steps, "n_steps"));
}

}  // namespace heatadapt
