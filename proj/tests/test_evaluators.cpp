#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "escher/evaluators.hpp"
#include "escher/geometry_ops.hpp"
#include "escher/rng.hpp"
#include "oracles.hpp"

using escher::Construction;
using escher::CpCircles;
using escher::eval_cp;
using escher::eval_ht;
using escher::eval_kn;
using escher::HtPoints;
using escher::KnVectors;
using escher::TaskDomain;
using escher::TaskSpec;

namespace {

Construction kn_axes() {
  KnVectors vectors;
  for (int i = 0; i < 11; ++i) {
    std::vector<std::int64_t> v(11, 0);
    v[i] = 2;
    vectors.push_back(v);
    v[i] = -2;
    vectors.push_back(v);
  }
  Construction c;
  c.data = std::move(vectors);
  return c;
}

CpCircles grid_circles() {
  CpCircles circles;
  for (int row = 0; row < 5 && circles.size() < 26; ++row)
    for (int col = 0; col < 6 && circles.size() < 26; ++col)
      circles.push_back(escher::Circle{(col + 0.5) / 6.0, (row + 0.5) / 5.0, 0.05});
  return circles;
}

}  // namespace

TEST_CASE("kn: axis vectors form a valid 22-element set") {
  const auto spec = TaskSpec::defaults(TaskDomain::KN);
  const auto c = kn_axes();
  const auto r = eval_kn(c, spec);
  CHECK(r.valid);
  CHECK(r.s_raw == 22.0);
  CHECK(r.s_norm == doctest::Approx(22.0 / 593.0).epsilon(1e-15));
  const auto oracle = oracles::check_kn(c.vectors(), 11);
  CHECK(oracle.valid);
  CHECK(oracle.s_raw == 22.0);
}

TEST_CASE("kn: the empty set is vacuously valid with score zero") {
  Construction c;
  c.data = KnVectors{};
  const auto r = eval_kn(c, TaskSpec::defaults(TaskDomain::KN));
  CHECK(r.valid);
  CHECK(r.s_raw == 0.0);
  CHECK(r.s_norm == 0.0);
}

TEST_CASE("kn: rejects bad vectors") {
  const auto spec = TaskSpec::defaults(TaskDomain::KN);
  SUBCASE("wrong dimension") {
    Construction c;
    c.data = KnVectors{{2, 0, 0}};
    const auto r = eval_kn(c, spec);
    CHECK_FALSE(r.valid);
    CHECK(r.s_raw == 0.0);
    CHECK(r.violation.has_value());
  }
  SUBCASE("zero vector") {
    Construction c;
    c.data = KnVectors{std::vector<std::int64_t>(11, 0)};
    CHECK_FALSE(eval_kn(c, spec).valid);
  }
  SUBCASE("norm above the bound") {
    std::vector<std::int64_t> big(11, 0);
    big[0] = 2;
    big[1] = 1;
    Construction c;
    c.data = KnVectors{big};
    CHECK_FALSE(eval_kn(c, spec).valid);
  }
  SUBCASE("huge components do not overflow") {
    std::vector<std::int64_t> big(11, 0);
    big[0] = 3000000000LL;
    Construction c;
    c.data = KnVectors{big};
    CHECK_FALSE(eval_kn(c, spec).valid);
  }
  SUBCASE("duplicates violate the separation constraint") {
    auto c = kn_axes();
    auto vectors = c.vectors();
    vectors.push_back(vectors.front());
    c.data = vectors;
    CHECK_FALSE(eval_kn(c, spec).valid);
  }
}

TEST_CASE("kn: negating every vector preserves validity and score") {
  auto c = kn_axes();
  auto flipped = c.vectors();
  for (auto& v : flipped)
    for (auto& comp : v) comp = -comp;
  Construction neg;
  neg.data = flipped;
  const auto spec = TaskSpec::defaults(TaskDomain::KN);
  const auto a = eval_kn(c, spec);
  const auto b = eval_kn(neg, spec);
  CHECK(a.valid == b.valid);
  CHECK(a.s_raw == b.s_raw);
}

TEST_CASE("cp: the 6x5 grid of radius 0.05 sums to 1.3") {
  Construction c;
  c.data = grid_circles();
  const auto r = eval_cp(c, TaskSpec::defaults(TaskDomain::CP));
  CHECK(r.valid);
  CHECK(r.s_raw == doctest::Approx(1.3).epsilon(1e-12));
  const auto oracle = oracles::check_cp(c.circles(), 26, 1e-9);
  CHECK(oracle.valid);
  CHECK(std::abs(oracle.s_raw - r.s_raw) <= 1e-12);
}

TEST_CASE("cp: failure modes") {
  const auto spec = TaskSpec::defaults(TaskDomain::CP);
  SUBCASE("wrong cardinality") {
    auto circles = grid_circles();
    circles.pop_back();
    Construction c;
    c.data = circles;
    const auto r = eval_cp(c, spec);
    CHECK_FALSE(r.valid);
    REQUIRE(r.violation.has_value());
    CHECK(r.violation->find("wrong cardinality") != std::string::npos);
  }
  SUBCASE("coincident circles overlap") {
    auto circles = grid_circles();
    circles[5] = circles[4];
    Construction c;
    c.data = circles;
    CHECK_FALSE(eval_cp(c, spec).valid);
  }
  SUBCASE("circle outside the square") {
    auto circles = grid_circles();
    circles[0].x = 0.01;  // radius 0.05 pokes out
    Construction c;
    c.data = circles;
    CHECK_FALSE(eval_cp(c, spec).valid);
  }
  SUBCASE("non-positive radius") {
    auto circles = grid_circles();
    circles[0].r = 0.0;
    Construction c;
    c.data = circles;
    CHECK_FALSE(eval_cp(c, spec).valid);
  }
}

TEST_CASE("cp: tangency within tolerance is accepted") {
  // an exactly tangent pair plus 24 well-separated small circles
  CpCircles circles{{0.3, 0.2, 0.1}, {0.5, 0.2, 0.1}};
  for (int row = 0; row < 4; ++row)
    for (int col = 0; col < 6; ++col)
      circles.push_back(escher::Circle{0.1 + 0.16 * col, 0.5 + 0.15 * row, 0.02});
  REQUIRE(circles.size() == 26);
  Construction c;
  c.data = circles;
  CHECK(eval_cp(c, TaskSpec::defaults(TaskDomain::CP)).valid);
}

TEST_CASE("cp: shrinking never invalidates, growing past contact always does") {
  const auto spec = TaskSpec::defaults(TaskDomain::CP);
  escher::Rng rng(41);
  for (int round = 0; round < 20; ++round) {
    CpCircles circles = grid_circles();
    for (auto& circ : circles) {
      circ.x += escher::normal_sample(rng, 0.0, 0.01);
      circ.y += escher::normal_sample(rng, 0.0, 0.01);
    }
    escher::cp_feasibility_shrink(circles);
    escher::cp_expand(circles, 10);
    Construction c;
    c.data = circles;
    REQUIRE(eval_cp(c, spec).valid);

    const std::size_t pick = escher::uniform_index(rng, circles.size());
    auto shrunk = circles;
    shrunk[pick].r *= 0.9;
    Construction cs;
    cs.data = shrunk;
    CHECK(eval_cp(cs, spec).valid);

    // slack of the picked circle against walls and neighbors
    double slack = escher::circle_border_room(circles[pick]) - circles[pick].r;
    for (std::size_t j = 0; j < circles.size(); ++j)
      if (j != pick)
        slack = std::min(slack, escher::circle_distance(circles[pick], circles[j]) -
                                    circles[pick].r - circles[j].r);
    auto grown = circles;
    grown[pick].r += slack + 1e-6;  // well past first contact
    Construction cg;
    cg.data = grown;
    CHECK_FALSE(eval_cp(cg, spec).valid);
  }
}

TEST_CASE("ht: collinear or duplicate points score zero") {
  const auto spec = TaskSpec::defaults(TaskDomain::HT);
  SUBCASE("three collinear points") {
    HtPoints pts;
    for (int i = 0; i < 11; ++i) pts.push_back(escher::Point{0.05 + 0.9 * i / 10.0, 0.0});
    Construction c;
    c.data = pts;
    const auto r = eval_ht(c, spec);
    CHECK(r.valid);
    CHECK(r.s_raw == 0.0);
  }
  SUBCASE("vertices plus duplicated vertex") {
    HtPoints pts{{0.0, 0.0}, {1.0, 0.0}, {0.5, escher::kSqrt3 / 2.0}};
    while (pts.size() < 11) pts.push_back(escher::Point{0.0, 0.0});
    Construction c;
    c.data = pts;
    const auto r = eval_ht(c, spec);
    CHECK(r.valid);
    CHECK(r.s_raw == 0.0);
  }
}

TEST_CASE("ht: a point outside the triangle is invalid") {
  const auto spec = TaskSpec::defaults(TaskDomain::HT);
  HtPoints pts;
  escher::Rng rng(5);
  for (int i = 0; i < 10; ++i) pts.push_back(escher::ht_random_point(rng));
  pts.push_back(escher::Point{0.95, 0.5});  // right of the right edge
  Construction c;
  c.data = pts;
  const auto r = eval_ht(c, spec);
  CHECK_FALSE(r.valid);
  REQUIRE(r.violation.has_value());
  CHECK(r.violation->find("outside") != std::string::npos);

  pts.pop_back();
  Construction short_set;
  short_set.data = pts;
  CHECK_FALSE(eval_ht(short_set, spec).valid);  // wrong cardinality
}

TEST_CASE("ht: the six triangle symmetries preserve the score") {
  escher::Rng rng(9);
  HtPoints pts;
  for (int i = 0; i < 11; ++i) pts.push_back(escher::ht_random_point(rng));
  Construction base;
  base.data = pts;
  const auto spec = TaskSpec::defaults(TaskDomain::HT);
  const auto reference = eval_ht(base, spec);
  REQUIRE(reference.valid);

  const double cx = 0.5, cy = escher::kSqrt3 / 6.0;  // centroid
  for (int rot = 0; rot < 3; ++rot) {
    for (int mirror = 0; mirror < 2; ++mirror) {
      HtPoints mapped;
      const double angle = 2.0 * M_PI * rot / 3.0;
      for (const auto& p : pts) {
        double x = p.x - cx, y = p.y - cy;
        if (mirror) x = -x;  // reflection across the vertical axis
        const double rx = x * std::cos(angle) - y * std::sin(angle);
        const double ry = x * std::sin(angle) + y * std::cos(angle);
        mapped.push_back(escher::Point{rx + cx, ry + cy});
      }
      Construction c;
      c.data = mapped;
      const auto r = eval_ht(c, spec);
      CHECK(r.valid);
      CHECK(std::abs(r.s_raw - reference.s_raw) <= 1e-12);
    }
  }
}

TEST_CASE("evaluators are deterministic and permutation invariant") {
  escher::Rng rng(77);
  const auto cp_spec = TaskSpec::defaults(TaskDomain::CP);
  CpCircles circles = grid_circles();
  for (auto& circ : circles) {
    circ.x += escher::normal_sample(rng, 0.0, 0.005);
    circ.y += escher::normal_sample(rng, 0.0, 0.005);
  }
  escher::cp_feasibility_shrink(circles);
  escher::cp_expand(circles, 8);
  Construction c;
  c.data = circles;
  const auto first = eval_cp(c, cp_spec);
  const auto second = eval_cp(c, cp_spec);
  CHECK(first.valid == second.valid);
  CHECK(first.s_raw == second.s_raw);  // bit-identical
  CHECK(first.s_norm == second.s_norm);

  for (int round = 0; round < 10; ++round) {
    auto shuffled = circles;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[escher::uniform_index(rng, i)]);
    Construction cs;
    cs.data = shuffled;
    const auto r = eval_cp(cs, cp_spec);
    CHECK(r.valid == first.valid);
    CHECK(r.s_raw == first.s_raw);  // stable sum makes this exact
  }
}

TEST_CASE("ht: reordering points changes nothing") {
  escher::Rng rng(15);
  HtPoints pts;
  for (int i = 0; i < 11; ++i) pts.push_back(escher::ht_random_point(rng));
  Construction c;
  c.data = pts;
  const auto spec = TaskSpec::defaults(TaskDomain::HT);
  const auto reference = eval_ht(c, spec);
  for (int round = 0; round < 5; ++round) {
    auto shuffled = pts;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[escher::uniform_index(rng, i)]);
    Construction cs;
    cs.data = shuffled;
    const auto r = eval_ht(cs, spec);
    CHECK(r.valid == reference.valid);
    CHECK(r.s_raw == reference.s_raw);
  }
}

TEST_CASE("evaluate_construction rejects a task/variant mismatch") {
  Construction c;
  c.data = grid_circles();
  const auto r = escher::evaluate_construction(c, TaskSpec::defaults(TaskDomain::KN));
  CHECK_FALSE(r.valid);
}

TEST_CASE("norm is raw over reference and is not clipped") {
  CpCircles circles = grid_circles();
  Construction c;
  c.data = circles;
  TaskSpec spec = TaskSpec::defaults(TaskDomain::CP);
  spec.s_ref = 1.0;  // forces s_norm = s_raw = 1.3 > 1
  const auto r = eval_cp(c, spec);
  CHECK(r.valid);
  CHECK(r.s_norm == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(r.s_norm > 1.0);
}
