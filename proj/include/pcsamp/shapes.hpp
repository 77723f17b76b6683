#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pcsamp/errors.hpp"
#include "pcsamp/point_cloud.hpp"
#include "pcsamp/rng.hpp"

namespace pcsamp {

/// A generated point set with an analytic ground-truth edge mask.
template <typename Scalar>
struct SyntheticShapeT {
  PointCloudT<Scalar> cloud;
  std::vector<bool> edge_mask;
  std::string generator;

  Index edge_count() const {
    Index c = 0;
    for (bool b : edge_mask) c += b;
    return c;
  }
};

using SyntheticShape = SyntheticShapeT<double>;

struct ShapeParams {
  Index nx = 10;          // grid2d / l-bracket lattice size
  Index ny = 10;
  Index count = 64;       // circle / cube-shell point count
  double spacing = 1.0;   // lattice step
  double radius = 1.0;    // circle radius
  double edge_tol = 0.05; // cube-shell: distance band around the 12 edges
};

namespace detail {

inline SyntheticShape gen_grid2d(const ShapeParams& p) {
  if (p.nx < 1 || p.ny < 1) throw UnknownGenerator("grid2d: nx and ny must be >= 1");
  SyntheticShape shape;
  shape.generator = "grid2d";
  const Index n = p.nx * p.ny;
  shape.cloud.points.resize(n, 3);
  shape.cloud.id = "grid2d";
  shape.edge_mask.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < p.nx; ++i)
    for (Index j = 0; j < p.ny; ++j) {
      const Index at = i * p.ny + j;
      shape.cloud.points.row(at) << static_cast<double>(i) * p.spacing,
          static_cast<double>(j) * p.spacing, 0.0;
      shape.edge_mask[static_cast<std::size_t>(at)] =
          i == 0 || i == p.nx - 1 || j == 0 || j == p.ny - 1;
    }
  return shape;
}

inline SyntheticShape gen_circle(const ShapeParams& p) {
  if (p.count < 1) throw UnknownGenerator("circle: count must be >= 1");
  SyntheticShape shape;
  shape.generator = "circle";
  shape.cloud.points.resize(p.count, 3);
  shape.cloud.id = "circle";
  shape.edge_mask.assign(static_cast<std::size_t>(p.count), true);  // a 1D manifold is all edge
  for (Index i = 0; i < p.count; ++i) {
    const double angle = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(p.count);
    shape.cloud.points.row(i) << p.radius * std::cos(angle), p.radius * std::sin(angle), 0.0;
  }
  return shape;
}

inline SyntheticShape gen_cube_shell(const ShapeParams& p, std::uint64_t seed) {
  if (p.count < 1) throw UnknownGenerator("cube-shell: count must be >= 1");
  SyntheticShape shape;
  shape.generator = "cube-shell";
  shape.cloud.points.resize(p.count, 3);
  shape.cloud.id = "cube-shell";
  shape.edge_mask.resize(static_cast<std::size_t>(p.count));
  Rng rng(seed);
  for (Index i = 0; i < p.count; ++i) {
    const Index face = rng.uniform_index(6);
    const double u = rng.uniform();
    const double v = rng.uniform();
    double c[3];
    const int axis = static_cast<int>(face) / 2;
    c[axis] = (face % 2 == 0) ? 0.0 : 1.0;
    c[(axis + 1) % 3] = u;
    c[(axis + 2) % 3] = v;
    shape.cloud.points.row(i) << c[0], c[1], c[2];
    // For an on-surface point the nearest of the 12 cube edges lies at the
    // smallest in-face margin.
    const double margin = std::min(std::min(u, 1.0 - u), std::min(v, 1.0 - v));
    shape.edge_mask[static_cast<std::size_t>(i)] = margin <= p.edge_tol;
  }
  return shape;
}

inline SyntheticShape gen_l_bracket(const ShapeParams& p) {
  if (p.nx < 2 || p.ny < 2) throw UnknownGenerator("l-bracket: nx and ny must be >= 2");
  SyntheticShape shape;
  shape.generator = "l-bracket";
  shape.cloud.id = "l-bracket";
  const Index cx = p.nx / 2;
  const Index cy = p.ny / 2;
  std::vector<double> coords;
  std::vector<bool> mask;
  for (Index i = 0; i < p.nx; ++i)
    for (Index j = 0; j < p.ny; ++j) {
      if (i >= cx && j >= cy) continue;  // notch
      coords.push_back(static_cast<double>(i) * p.spacing);
      coords.push_back(static_cast<double>(j) * p.spacing);
      coords.push_back(0.0);
      const bool outline = i == 0 || j == 0 || (j < cy && i == p.nx - 1) ||
                           (i < cx && j == p.ny - 1) || (i == cx - 1 && j >= cy) ||
                           (j == cy - 1 && i >= cx);
      mask.push_back(outline);
    }
  const Index n = static_cast<Index>(mask.size());
  shape.cloud.points.resize(n, 3);
  for (Index i = 0; i < n; ++i)
    shape.cloud.points.row(i) << coords[static_cast<std::size_t>(3 * i)],
        coords[static_cast<std::size_t>(3 * i + 1)], coords[static_cast<std::size_t>(3 * i + 2)];
  shape.edge_mask = std::move(mask);
  return shape;
}

}  // namespace detail

/// Deterministic synthetic shapes; the seed only feeds generators with a
/// random placement component (cube-shell).
inline SyntheticShape gen_shape(const std::string& id, const ShapeParams& params,
                                std::uint64_t seed) {
  if (id == "grid2d") return detail::gen_grid2d(params);
  if (id == "circle") return detail::gen_circle(params);
  if (id == "cube-shell") return detail::gen_cube_shell(params, seed);
  if (id == "l-bracket") return detail::gen_l_bracket(params);
  throw UnknownGenerator("unknown shape generator '" + id + "'");
}

}  // namespace pcsamp
