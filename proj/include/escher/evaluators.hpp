#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "escher/construction.hpp"

namespace escher {

// Reference constants for score normalization.
inline constexpr int kKnDimension = 11;
inline constexpr double kKnReference = 593.0;
inline constexpr int kCpCircleCount = 26;
inline constexpr double kCpReference = 2.6350;
inline constexpr int kHtPointCount = 11;
inline constexpr double kHtReference = 0.036529889880030156;
// Area of the domain triangle conv{(0,0),(1,0),(1/2,sqrt(3)/2)}: sqrt(3)/4.
// Heilbronn scores are reported as a fraction of it (min_area_normalized).
inline constexpr double kHtDomainArea = 0.43301270189221932338;

struct TaskSpec {
  TaskDomain task = TaskDomain::CP;
  int dimension = kKnDimension;   // KN only
  int cardinality = 0;            // required element count; 0 = unconstrained (KN)
  double s_ref = 1.0;
  double exec_timeout_s = 120.0;
  double tolerance = 1e-9;        // CP/HT constraint slack; KN is exact

  static TaskSpec defaults(TaskDomain task) {
    TaskSpec spec;
    spec.task = task;
    switch (task) {
      case TaskDomain::KN:
        spec.cardinality = 0;
        spec.s_ref = kKnReference;
        break;
      case TaskDomain::CP:
        spec.cardinality = kCpCircleCount;
        spec.s_ref = kCpReference;
        break;
      case TaskDomain::HT:
        spec.cardinality = kHtPointCount;
        spec.s_ref = kHtReference;
        break;
    }
    return spec;
  }
};

struct EvalResult {
  bool valid = false;
  double s_raw = 0.0;
  double s_norm = 0.0;  // s_raw / s_ref, deliberately not clipped at 1.0
  std::optional<std::string> violation;
  double exec_tokens_equivalent = 0.0;
  double wall_time_s = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"valid", valid},
                     {"s_raw", s_raw},
                     {"s_norm", s_norm},
                     {"exec_tokens_equivalent", exec_tokens_equivalent},
                     {"wall_time_s", wall_time_s}};
    if (violation) j["violation"] = *violation;
    return j;
  }
};

namespace detail {

inline EvalResult invalid_result(std::string why) {
  EvalResult r;
  r.valid = false;
  r.s_raw = 0.0;
  r.s_norm = 0.0;
  r.violation = std::move(why);
  return r;
}

inline EvalResult valid_result(double s_raw, double s_ref) {
  EvalResult r;
  r.valid = true;
  r.s_raw = s_raw;
  r.s_norm = s_raw / s_ref;
  return r;
}

// Permutation-stable sum: identical multisets of radii give bit-identical
// totals regardless of input order.
inline double stable_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

}  // namespace detail

// Kissing-number evaluator: nonzero integer vectors in Z^d with squared norm
// <= 4 and pairwise squared distance >= 4. Exact integer arithmetic; the
// score is the cardinality of the set.
inline EvalResult eval_kn(const Construction& c, const TaskSpec& spec) {
  if (c.task() != TaskDomain::KN) return detail::invalid_result("construction is not a kn document");
  const KnVectors& vs = c.vectors();

  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (static_cast<int>(vs[i].size()) != spec.dimension)
      return detail::invalid_result("vector " + std::to_string(i) + " has wrong dimension");
    std::int64_t norm2 = 0;
    bool zero = true;
    for (std::int64_t comp : vs[i]) {
      if (comp != 0) zero = false;
      if (comp < -2 || comp > 2)  // any |component| > 2 already exceeds the norm bound
        return detail::invalid_result("vector " + std::to_string(i) + " exceeds squared norm 4");
      norm2 += comp * comp;
    }
    if (zero) return detail::invalid_result("vector " + std::to_string(i) + " is the zero vector");
    if (norm2 > 4)
      return detail::invalid_result("vector " + std::to_string(i) + " exceeds squared norm 4");
  }
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      std::int64_t dist2 = 0;
      for (int k = 0; k < spec.dimension; ++k) {
        const std::int64_t d = vs[i][k] - vs[j][k];
        dist2 += d * d;
      }
      if (dist2 < 4)
        return detail::invalid_result("vectors " + std::to_string(i) + " and " + std::to_string(j) +
                                      " are closer than squared distance 4");
    }
  }
  return detail::valid_result(static_cast<double>(vs.size()), spec.s_ref);
}

// Circle-packing evaluator: exactly n circles inside the unit square, no
// overlap beyond the constraint tolerance. Score is the total packed radius.
inline EvalResult eval_cp(const Construction& c, const TaskSpec& spec) {
  if (c.task() != TaskDomain::CP) return detail::invalid_result("construction is not a cp document");
  const CpCircles& circles = c.circles();
  if (static_cast<int>(circles.size()) != spec.cardinality)
    return detail::invalid_result("wrong cardinality: expected " +
                                  std::to_string(spec.cardinality) + " circles, got " +
                                  std::to_string(circles.size()));
  const double tol = spec.tolerance;
  for (std::size_t i = 0; i < circles.size(); ++i) {
    const Circle& a = circles[i];
    if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(a.r))
      return detail::invalid_result("circle " + std::to_string(i) + " has non-finite values");
    if (!(a.r > 0.0))
      return detail::invalid_result("circle " + std::to_string(i) + " has non-positive radius");
    if (a.x < a.r - tol || a.x > 1.0 - a.r + tol || a.y < a.r - tol || a.y > 1.0 - a.r + tol)
      return detail::invalid_result("circle " + std::to_string(i) + " leaves the unit square");
  }
  for (std::size_t i = 0; i < circles.size(); ++i) {
    for (std::size_t j = i + 1; j < circles.size(); ++j) {
      const double dx = circles[i].x - circles[j].x;
      const double dy = circles[i].y - circles[j].y;
      const double dist = std::sqrt(dx * dx + dy * dy);
      if (dist < circles[i].r + circles[j].r - tol)
        return detail::invalid_result("circles " + std::to_string(i) + " and " +
                                      std::to_string(j) + " overlap");
    }
  }
  std::vector<double> radii;
  radii.reserve(circles.size());
  for (const Circle& circ : circles) radii.push_back(circ.r);
  return detail::valid_result(detail::stable_sum(std::move(radii)), spec.s_ref);
}

namespace detail {

// Barycentric coordinates w.r.t. the equilateral triangle
// conv{(0,0), (1,0), (1/2, sqrt(3)/2)}.
inline void ht_barycentric(const Point& p, double& l0, double& l1, double& l2) {
  constexpr double inv_sqrt3 = 0.57735026918962576451;  // 1/sqrt(3)
  l2 = 2.0 * p.y * inv_sqrt3;
  l1 = p.x - p.y * inv_sqrt3;
  l0 = 1.0 - l1 - l2;
}

// Vertices are put in a canonical order first so the rounding, and therefore
// the score, is bit-identical under any permutation of the point list.
inline double triangle_area(const Point& a, const Point& b, const Point& c) {
  const Point* v[3] = {&a, &b, &c};
  auto before = [](const Point* p, const Point* q) {
    return p->x < q->x || (p->x == q->x && p->y < q->y);
  };
  if (before(v[1], v[0])) std::swap(v[0], v[1]);
  if (before(v[2], v[1])) std::swap(v[1], v[2]);
  if (before(v[1], v[0])) std::swap(v[0], v[1]);
  const double cross = (v[1]->x - v[0]->x) * (v[2]->y - v[0]->y) -
                       (v[1]->y - v[0]->y) * (v[2]->x - v[0]->x);
  return std::abs(cross) / 2.0;
}

}  // namespace detail

// Heilbronn evaluator: exactly n points inside the equilateral triangle;
// score is the minimum triple area as a fraction of the triangle's area.
inline EvalResult eval_ht(const Construction& c, const TaskSpec& spec) {
  if (c.task() != TaskDomain::HT) return detail::invalid_result("construction is not an ht document");
  const HtPoints& pts = c.points();
  if (static_cast<int>(pts.size()) != spec.cardinality)
    return detail::invalid_result("wrong cardinality: expected " +
                                  std::to_string(spec.cardinality) + " points, got " +
                                  std::to_string(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!std::isfinite(pts[i].x) || !std::isfinite(pts[i].y))
      return detail::invalid_result("point " + std::to_string(i) + " has non-finite coordinates");
    double l0, l1, l2;
    detail::ht_barycentric(pts[i], l0, l1, l2);
    if (l0 < -spec.tolerance || l1 < -spec.tolerance || l2 < -spec.tolerance)
      return detail::invalid_result("point " + std::to_string(i) + " lies outside the triangle");
  }
  double min_area = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      for (std::size_t k = j + 1; k < pts.size(); ++k)
        min_area = std::min(min_area, detail::triangle_area(pts[i], pts[j], pts[k]));
  if (!std::isfinite(min_area)) min_area = 0.0;  // fewer than 3 points cannot happen here
  return detail::valid_result(min_area / kHtDomainArea, spec.s_ref);
}

// Dispatch on the spec's task. A construction of the wrong variant is an
// evaluation failure, not an exception: evolved payloads are untrusted.
inline EvalResult evaluate_construction(const Construction& c, const TaskSpec& spec) {
  switch (spec.task) {
    case TaskDomain::KN: return eval_kn(c, spec);
    case TaskDomain::CP: return eval_cp(c, spec);
    case TaskDomain::HT: return eval_ht(c, spec);
  }
  return detail::invalid_result("unknown task");
}

}  // namespace escher
