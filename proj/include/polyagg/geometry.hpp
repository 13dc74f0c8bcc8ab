// Copyright 2026 The polyagg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Planar polygon kernels. Point lists are Eigen row-per-point matrices, so
// the functions accept any expression with two columns (blocks, maps, ...).

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace polyagg {

template <class Scalar>
using Points2 = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
using Points2d = Points2<double>;
using Point2d = Eigen::Matrix<double, 1, 2>;

namespace geom {

/// Shoelace area, positive for counter-clockwise loops.
template <class Derived>
typename Derived::Scalar signed_area(const Eigen::MatrixBase<Derived>& pts) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = pts.rows();
  Scalar twice = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index l = (k + 1) % n;
    twice += pts(k, 0) * pts(l, 1) - pts(l, 0) * pts(k, 1);
  }
  return twice / Scalar(2);
}

/// Area-weighted centroid. Undefined for zero-area loops; callers check.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, 1, 2> centroid(const Eigen::MatrixBase<Derived>& pts) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = pts.rows();
  // Translate to the first vertex to limit cancellation for far-off polygons.
  const Eigen::Matrix<Scalar, 1, 2> origin = pts.row(0);
  Scalar twice = 0, cx = 0, cy = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index l = (k + 1) % n;
    const Scalar xk = pts(k, 0) - origin(0), yk = pts(k, 1) - origin(1);
    const Scalar xl = pts(l, 0) - origin(0), yl = pts(l, 1) - origin(1);
    const Scalar cross = xk * yl - xl * yk;
    twice += cross;
    cx += (xk + xl) * cross;
    cy += (yk + yl) * cross;
  }
  return origin + Eigen::Matrix<Scalar, 1, 2>(cx, cy) / (Scalar(3) * twice);
}

/// Largest pairwise vertex distance. For a polygon this equals the diameter
/// of the region, since the farthest pair of points is always a vertex pair.
template <class Derived>
typename Derived::Scalar diameter(const Eigen::MatrixBase<Derived>& pts) {
  using Scalar = typename Derived::Scalar;
  Scalar best = 0;
  for (Eigen::Index a = 0; a < pts.rows(); ++a)
    for (Eigen::Index b = a + 1; b < pts.rows(); ++b)
      best = std::max(best, (pts.row(a) - pts.row(b)).squaredNorm());
  return std::sqrt(best);
}

template <class Scalar>
Scalar segment_distance(const Eigen::Matrix<Scalar, 1, 2>& p, const Eigen::Matrix<Scalar, 1, 2>& a,
                        const Eigen::Matrix<Scalar, 1, 2>& b) {
  const Eigen::Matrix<Scalar, 1, 2> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  Scalar t = len2 > 0 ? (p - a).dot(ab) / len2 : Scalar(0);
  t = std::clamp(t, Scalar(0), Scalar(1));
  return (p - (a + t * ab)).norm();
}

/// Even-odd crossing test against a set of closed loops (holes allowed).
template <class Scalar>
bool inside_loops(const Eigen::Matrix<Scalar, 1, 2>& p, const std::vector<Points2<Scalar>>& loops) {
  bool inside = false;
  for (const auto& loop : loops) {
    const Eigen::Index n = loop.rows();
    for (Eigen::Index k = 0, l = n - 1; k < n; l = k++) {
      const Scalar yk = loop(k, 1), yl = loop(l, 1);
      if ((yk > p(1)) != (yl > p(1))) {
        const Scalar x = loop(k, 0) + (p(1) - yk) * (loop(l, 0) - loop(k, 0)) / (yl - yk);
        if (p(0) < x) inside = !inside;
      }
    }
  }
  return inside;
}

/// Distance from p to the nearest loop edge.
template <class Scalar>
Scalar boundary_distance(const Eigen::Matrix<Scalar, 1, 2>& p, const std::vector<Points2<Scalar>>& loops) {
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (const auto& loop : loops) {
    const Eigen::Index n = loop.rows();
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Matrix<Scalar, 1, 2> a = loop.row(k);
      const Eigen::Matrix<Scalar, 1, 2> b = loop.row((k + 1) % n);
      best = std::min(best, segment_distance<Scalar>(p, a, b));
    }
  }
  return best;
}

/// Keeps the part of a convex polygon where normal . x <= offset.
template <class Scalar>
Points2<Scalar> clip_halfplane(const Points2<Scalar>& poly, const Eigen::Matrix<Scalar, 1, 2>& normal,
                               Scalar offset) {
  const Eigen::Index n = poly.rows();
  std::vector<Eigen::Matrix<Scalar, 1, 2>> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Matrix<Scalar, 1, 2> a = poly.row(k);
    const Eigen::Matrix<Scalar, 1, 2> b = poly.row((k + 1) % n);
    const Scalar da = normal.dot(a) - offset;
    const Scalar db = normal.dot(b) - offset;
    if (da <= 0) out.push_back(a);
    if ((da < 0 && db > 0) || (da > 0 && db < 0)) out.push_back(a + (da / (da - db)) * (b - a));
  }
  Points2<Scalar> result(static_cast<Eigen::Index>(out.size()), 2);
  for (std::size_t k = 0; k < out.size(); ++k) result.row(static_cast<Eigen::Index>(k)) = out[k];
  return result;
}

}  // namespace geom
}  // namespace polyagg
