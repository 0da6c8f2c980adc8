#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "escher/construction.hpp"
#include "escher/rng.hpp"

namespace escher {

inline constexpr double kSqrt3 = 1.7320508075688772935;

// --- circle packing helpers -------------------------------------------------

inline double circle_border_room(const Circle& c) {
  return std::min(std::min(c.x, 1.0 - c.x), std::min(c.y, 1.0 - c.y));
}

inline double circle_distance(const Circle& a, const Circle& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Shrinks all radii by the largest common factor that restores feasibility.
inline void cp_feasibility_shrink(CpCircles& circles) {
  double lambda = 1.0;
  for (std::size_t i = 0; i < circles.size(); ++i) {
    const double room = circle_border_room(circles[i]);
    if (circles[i].r > room) lambda = std::min(lambda, std::max(0.0, room) / circles[i].r);
    for (std::size_t j = i + 1; j < circles.size(); ++j) {
      const double d = circle_distance(circles[i], circles[j]);
      const double rr = circles[i].r + circles[j].r;
      if (rr > d) lambda = std::min(lambda, d / rr);
    }
  }
  lambda = std::max(lambda, 0.0) * (1.0 - 1e-13);
  for (Circle& c : circles) c.r = std::max(c.r * lambda, 1e-12);
}

// Greedy maximal radii: every circle grows until blocked by the square or a
// neighbor. Monotone and feasibility-preserving from a feasible start.
inline void cp_expand(CpCircles& circles, int sweeps = 30) {
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < circles.size(); ++i) {
      double cap = circle_border_room(circles[i]);
      for (std::size_t j = 0; j < circles.size(); ++j)
        if (j != i) cap = std::min(cap, circle_distance(circles[i], circles[j]) - circles[j].r);
      if (cap > circles[i].r) circles[i].r = cap;
    }
  }
}

// --- heilbronn helpers -------------------------------------------------------

inline void ht_project_into_triangle(Point& p) {
  double l2 = 2.0 * p.y / kSqrt3;
  double l1 = p.x - p.y / kSqrt3;
  double l0 = 1.0 - l1 - l2;
  if (l0 >= 0 && l1 >= 0 && l2 >= 0) return;
  l0 = std::max(l0, 0.0);
  l1 = std::max(l1, 0.0);
  l2 = std::max(l2, 0.0);
  const double s = l0 + l1 + l2;
  l1 /= s;
  l2 /= s;
  p.x = l1 + 0.5 * l2;
  p.y = l2 * (kSqrt3 / 2.0);
}

inline Point ht_random_point(Rng& rng) {
  double a = uniform_unit(rng), b = uniform_unit(rng);
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  const double c = 1.0 - a - b;
  return Point{b + 0.5 * c, c * (kSqrt3 / 2.0)};
}

// --- kissing number helpers --------------------------------------------------

// Candidate unit-sphere vectors: +-2 e_i or four +-1 entries.
inline std::vector<std::int64_t> kn_random_candidate(Rng& rng) {
  std::vector<std::int64_t> v(11, 0);
  if (uniform_unit(rng) < 0.1) {
    v[uniform_index(rng, 11)] = uniform_unit(rng) < 0.5 ? 2 : -2;
    return v;
  }
  int placed = 0;
  while (placed < 4) {
    const std::size_t pos = uniform_index(rng, 11);
    if (v[pos] != 0) continue;
    v[pos] = uniform_unit(rng) < 0.5 ? 1 : -1;
    ++placed;
  }
  return v;
}

inline bool kn_compatible(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::int64_t dist2 = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const std::int64_t d = a[k] - b[k];
    dist2 += d * d;
  }
  return dist2 >= 4;
}

}  // namespace escher
