// Offline search for strong task constructions. Used to produce seed
// populations and the frozen reference solutions under tests/data/.
//
//   construct_search kn  --seed N --out kn.json [--restarts N]
//   construct_search ht  --seed N --seconds S --out ht.json [--resume in.json]
//   construct_search cp  --seed N --seconds S --out cp.json [--resume in.json]
//   construct_search fit --in best.json --target V --out frozen.json
//
// kn builds a maximum partial Steiner packing (4-subsets of an 11-set with
// pairwise intersections <= 2) and expands it into unit-sphere integer
// vectors; ht runs adaptive softmin ascent on the minimum triangle area with
// teleport moves; cp alternates penalized gradient steps, force-balance
// relaxation, greedy radius expansion and an exact LP over the radii. fit
// rescales a solution so its score hits an exact target without losing
// validity.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "escher/construction.hpp"
#include "escher/evaluators.hpp"
#include "escher/geometry_ops.hpp"
#include "escher/rng.hpp"

namespace {

using escher::Circle;
using escher::Construction;
using escher::Point;
using escher::Rng;
using escher::TaskDomain;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Kissing number: 22 axis vectors (+-2 e_i) plus 16 signings of every block
// of a 3-(11,4) packing design. A 35-block packing yields 22 + 560 = 582.

struct KnSearch {
  std::vector<std::array<int, 4>> blocks;   // all C(11,4) candidate supports
  std::vector<std::vector<int>> conflicts;  // blocks sharing >= 3 points

  KnSearch() {
    for (int a = 0; a < 11; ++a)
      for (int b = a + 1; b < 11; ++b)
        for (int c = b + 1; c < 11; ++c)
          for (int d = c + 1; d < 11; ++d) blocks.push_back({a, b, c, d});
    conflicts.resize(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i)
      for (std::size_t j = i + 1; j < blocks.size(); ++j)
        if (overlap(blocks[i], blocks[j]) >= 3) {
          conflicts[i].push_back(static_cast<int>(j));
          conflicts[j].push_back(static_cast<int>(i));
        }
  }

  static int overlap(const std::array<int, 4>& a, const std::array<int, 4>& b) {
    int n = 0;
    for (int x : a)
      for (int y : b)
        if (x == y) ++n;
    return n;
  }

  std::vector<int> search(Rng& rng, int target, long max_steps) const {
    const int n = static_cast<int>(blocks.size());
    std::vector<char> in_set(n, 0);
    std::vector<int> chosen;
    auto conflict_count = [&](int cand) {
      int k = 0;
      for (int other : conflicts[cand]) k += in_set[other];
      return k;
    };
    auto add_free = [&]() {
      std::vector<int> order(n);
      std::iota(order.begin(), order.end(), 0);
      for (int i = n - 1; i > 0; --i) std::swap(order[i], order[escher::uniform_index(rng, i + 1)]);
      for (int cand : order)
        if (!in_set[cand] && conflict_count(cand) == 0) {
          in_set[cand] = 1;
          chosen.push_back(cand);
        }
    };
    add_free();
    std::vector<int> best = chosen;
    for (long step = 0; step < max_steps && static_cast<int>(best.size()) < target; ++step) {
      const int cand = static_cast<int>(escher::uniform_index(rng, n));
      if (in_set[cand]) continue;
      std::vector<int> clash;
      for (int other : conflicts[cand])
        if (in_set[other]) clash.push_back(other);
      if (clash.size() <= 1 || (clash.size() == 2 && escher::uniform_unit(rng) < 0.08)) {
        for (int other : clash) {
          in_set[other] = 0;
          chosen.erase(std::find(chosen.begin(), chosen.end(), other));
        }
        in_set[cand] = 1;
        chosen.push_back(cand);
        if (!clash.empty() && escher::uniform_unit(rng) < 0.5) add_free();
      }
      if (chosen.size() > best.size()) best = chosen;
    }
    return best;
  }

  Construction expand(const std::vector<int>& picked) const {
    escher::KnVectors vectors;
    for (int i = 0; i < 11; ++i) {
      std::vector<std::int64_t> v(11, 0);
      v[i] = 2;
      vectors.push_back(v);
      v[i] = -2;
      vectors.push_back(v);
    }
    for (int b : picked) {
      for (int signs = 0; signs < 16; ++signs) {
        std::vector<std::int64_t> v(11, 0);
        for (int k = 0; k < 4; ++k) v[blocks[b][k]] = (signs >> k) & 1 ? 1 : -1;
        vectors.push_back(v);
      }
    }
    Construction c;
    c.data = std::move(vectors);
    return c;
  }
};

int run_kn(std::uint64_t seed, int restarts, const std::string& out_path) {
  KnSearch searcher;
  std::vector<int> best;
  for (int r = 0; r < restarts; ++r) {
    Rng rng(seed + static_cast<std::uint64_t>(r) * 0x9e3779b97f4a7c15ULL);
    auto found = searcher.search(rng, 35, 4'000'000);
    if (found.size() > best.size()) best = found;
    std::cerr << "kn restart " << r << ": blocks=" << found.size() << " best=" << best.size()
              << "\n";
    if (best.size() >= 35) break;
  }
  Construction c = searcher.expand(best);
  const auto result = escher::eval_kn(c, escher::TaskSpec::defaults(TaskDomain::KN));
  std::cerr << "kn: vectors=" << c.vectors().size() << " valid=" << result.valid
            << " s_raw=" << result.s_raw << "\n";
  write_json(out_path, escher::construction_to_json(c));
  return result.valid && result.s_raw >= 582.0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Heilbronn: adaptive softmin ascent plus teleport moves. All bookkeeping is
// in absolute area; scores reported to the caller are normalized by the
// domain area, matching the evaluator.

double ht_min_area_abs(const std::vector<Point>& pts, std::size_t* arg_point = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const double cross = (pts[j].x - pts[i].x) * (pts[k].y - pts[i].y) -
                             (pts[j].y - pts[i].y) * (pts[k].x - pts[i].x);
        const double area = std::abs(cross) / 2.0;
        if (area < best) {
          best = area;
          if (arg_point != nullptr) *arg_point = i;
        }
      }
  return best;
}

// Element assignment for topology-directed search: each point is pinned to a
// vertex, constrained to one edge, or free inside the triangle.
enum class HtElement { Free, Bottom, Left, Right, VertexA, VertexB, VertexC };

void ht_project_element(Point& p, HtElement elem) {
  switch (elem) {
    case HtElement::Free:
      escher::ht_project_into_triangle(p);
      return;
    case HtElement::Bottom:
      p.x = std::clamp(p.x, 0.0, 1.0);
      p.y = 0.0;
      return;
    case HtElement::Left: {
      // segment (0,0) -> (1/2, sqrt(3)/2); direction (1/2, sqrt(3)/2), length 1
      double t = std::clamp(p.x * 0.5 + p.y * (escher::kSqrt3 / 2.0), 0.0, 1.0);
      p = Point{0.5 * t, (escher::kSqrt3 / 2.0) * t};
      return;
    }
    case HtElement::Right: {
      // segment (1,0) -> (1/2, sqrt(3)/2); direction (-1/2, sqrt(3)/2), length 1
      double t = std::clamp((p.x - 1.0) * -0.5 + p.y * (escher::kSqrt3 / 2.0), 0.0, 1.0);
      p = Point{1.0 - 0.5 * t, (escher::kSqrt3 / 2.0) * t};
      return;
    }
    case HtElement::VertexA: p = Point{0.0, 0.0}; return;
    case HtElement::VertexB: p = Point{1.0, 0.0}; return;
    case HtElement::VertexC: p = Point{0.5, escher::kSqrt3 / 2.0}; return;
  }
}

// Softmin ascent with the sharpness tied to the live gap between the minimum
// and the q-th smallest area, so the active set stays a handful of triples.
// An optional element assignment constrains points during the ascent.
double ht_optimize(std::vector<Point>& pts, int steps, double lr0, double lr1,
                   const std::vector<HtElement>* elements = nullptr) {
  const std::size_t n = pts.size();
  std::vector<std::array<std::size_t, 3>> triples;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) triples.push_back({i, j, k});

  std::vector<double> areas(triples.size()), signs(triples.size()), sorted(triples.size());
  std::vector<Point> grad(n), m(n, Point{0, 0}), v(n, Point{0, 0});
  const double b1 = 0.9, b2 = 0.999;

  for (int step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) / std::max(1, steps - 1);
    const double lr = lr0 * std::pow(lr1 / lr0, t);

    double amin = std::numeric_limits<double>::infinity();
    for (std::size_t ti = 0; ti < triples.size(); ++ti) {
      const auto [i, j, k] = triples[ti];
      const double cross = (pts[j].x - pts[i].x) * (pts[k].y - pts[i].y) -
                           (pts[j].y - pts[i].y) * (pts[k].x - pts[i].x);
      signs[ti] = cross >= 0 ? 1.0 : -1.0;
      areas[ti] = std::abs(cross) / 2.0;
      amin = std::min(amin, areas[ti]);
    }
    sorted = areas;
    std::nth_element(sorted.begin(), sorted.begin() + 11, sorted.end());
    const double spread = std::max(sorted[11] - amin, 1e-13);
    const double beta = std::clamp(3.0 / spread, 1e2, 1e13);

    for (auto& g : grad) g = Point{0.0, 0.0};
    double wsum = 0.0;
    for (std::size_t ti = 0; ti < triples.size(); ++ti) {
      const double w = std::exp(-beta * (areas[ti] - amin));
      if (w < 1e-12) continue;
      wsum += w;
      const auto [i, j, k] = triples[ti];
      const Point& a = pts[i];
      const Point& b = pts[j];
      const Point& c = pts[k];
      const double s = signs[ti] * 0.5 * w;
      grad[i].x += s * (b.y - c.y);
      grad[i].y += s * (c.x - b.x);
      grad[j].x += s * (c.y - a.y);
      grad[j].y += s * (a.x - c.x);
      grad[k].x += s * (a.y - b.y);
      grad[k].y += s * (b.x - a.x);
    }
    if (wsum <= 0.0) break;
    const double c1 = 1.0 / (1.0 - std::pow(b1, step + 1));
    const double c2 = 1.0 / (1.0 - std::pow(b2, step + 1));
    for (std::size_t i = 0; i < n; ++i) {
      const double gx = grad[i].x / wsum, gy = grad[i].y / wsum;
      m[i].x = b1 * m[i].x + (1 - b1) * gx;
      m[i].y = b1 * m[i].y + (1 - b1) * gy;
      v[i].x = b2 * v[i].x + (1 - b2) * gx * gx;
      v[i].y = b2 * v[i].y + (1 - b2) * gy * gy;
      pts[i].x += lr * (m[i].x * c1) / (std::sqrt(v[i].x * c2) + 1e-10);
      pts[i].y += lr * (m[i].y * c1) / (std::sqrt(v[i].y * c2) + 1e-10);
      if (elements != nullptr) ht_project_element(pts[i], (*elements)[i]);
      else escher::ht_project_into_triangle(pts[i]);
    }
  }
  return ht_min_area_abs(pts);
}

// Samples a boundary/interior topology, optimizes within it, then releases
// the constraints for a free polish.
double ht_topology_trial(std::vector<Point>& pts, Rng& rng) {
  std::vector<HtElement> elements;
  if (escher::uniform_unit(rng) < 0.75) elements.push_back(HtElement::VertexA);
  if (escher::uniform_unit(rng) < 0.75) elements.push_back(HtElement::VertexB);
  if (escher::uniform_unit(rng) < 0.75) elements.push_back(HtElement::VertexC);
  while (elements.size() < 11) {
    const double pick = escher::uniform_unit(rng);
    if (pick < 0.2) elements.push_back(HtElement::Bottom);
    else if (pick < 0.4) elements.push_back(HtElement::Left);
    else if (pick < 0.6) elements.push_back(HtElement::Right);
    else elements.push_back(HtElement::Free);
  }
  pts.clear();
  for (const HtElement elem : elements) {
    Point p = escher::ht_random_point(rng);
    ht_project_element(p, elem);
    pts.push_back(p);
  }
  ht_optimize(pts, 1200, 3e-3, 3e-6, &elements);
  return ht_optimize(pts, 900, 3e-4, 1e-7);
}

Point ht_random_boundary_point(Rng& rng) {
  const double u = escher::uniform_unit(rng);
  switch (escher::uniform_index(rng, 3)) {
    case 0: return Point{u, 0.0};
    case 1: return Point{u * 0.5, u * escher::kSqrt3 / 2.0};             // left edge
    default: return Point{0.5 + u * 0.5, (1.0 - u) * escher::kSqrt3 / 2.0};  // right edge
  }
}

std::vector<Point> ht_structured_start(Rng& rng) {
  std::vector<Point> pts;
  pts.push_back(Point{0.0, 0.0});
  pts.push_back(Point{1.0, 0.0});
  pts.push_back(Point{0.5, escher::kSqrt3 / 2.0});
  const int edge_extra = static_cast<int>(escher::uniform_index(rng, 7));
  for (int e = 0; e < edge_extra; ++e) pts.push_back(ht_random_boundary_point(rng));
  while (pts.size() < 11) pts.push_back(escher::ht_random_point(rng));
  return pts;
}

// Mirror-symmetric start about the triangle's vertical axis: 5 reflected
// pairs plus one axis point. Strong heilbronn configurations are often
// symmetric, and halving the search space helps find their basins.
std::vector<Point> ht_symmetric_start(Rng& rng) {
  std::vector<Point> pts;
  pts.push_back(Point{0.5, escher::uniform_unit(rng) * escher::kSqrt3 / 2.0});
  for (int pair = 0; pair < 5; ++pair) {
    Point p = escher::uniform_unit(rng) < 0.4 ? ht_random_boundary_point(rng)
                                              : escher::ht_random_point(rng);
    pts.push_back(p);
    pts.push_back(Point{1.0 - p.x, p.y});
  }
  return pts;
}

std::vector<Point> ht_symmetrize(const std::vector<Point>& pts) {
  // pair each point with the nearest reflection and average the pair
  std::vector<Point> mirrored;
  for (const auto& p : pts) mirrored.push_back(Point{1.0 - p.x, p.y});
  std::vector<char> used(pts.size(), 0);
  std::vector<Point> out = pts;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best_d = 1e18;
    std::size_t best_j = i;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (used[j]) continue;
      const double d = std::hypot(pts[j].x - mirrored[i].x, pts[j].y - mirrored[i].y);
      if (d < best_d) {
        best_d = d;
        best_j = j;
      }
    }
    if (best_j == i) {
      out[i].x = 0.5;  // snap lone points to the axis
    } else if (!used[i] && !used[best_j]) {
      const Point avg{0.5 * (pts[i].x + 1.0 - pts[best_j].x), 0.5 * (pts[i].y + pts[best_j].y)};
      out[i] = avg;
      out[best_j] = Point{1.0 - avg.x, avg.y};
      used[i] = used[best_j] = 1;
    }
  }
  for (auto& p : out) escher::ht_project_into_triangle(p);
  return out;
}

int run_ht(std::uint64_t seed, double seconds, const std::string& out_path,
           const std::string& resume_path) {
  Rng rng(seed);
  std::vector<Point> best_pts;
  double best = -1.0;  // absolute area

  auto report = [&](long trial) {
    Construction c;
    c.data = best_pts;
    write_json(out_path, escher::construction_to_json(c));
    std::cerr << "ht trial " << trial << ": best " << std::setprecision(17) << best
              << " (normalized " << best / escher::kHtDomainArea << ")\n";
  };

  if (!resume_path.empty()) {
    std::ifstream in(resume_path);
    nlohmann::json j;
    in >> j;
    best_pts = escher::construction_from_json(j).points();
    best = ht_min_area_abs(best_pts);
    std::cerr << "ht resume: " << std::setprecision(17) << best << "\n";
  }

  long trials = 0;
  while (now_seconds() < seconds) {
    std::vector<Point> pts;
    const int mode = best < 0 ? 0 : static_cast<int>(trials % 12);
    if (mode < 2) {  // fresh starts keep diversity
      const double pick = escher::uniform_unit(rng);
      if (pick < 0.45) {
        const double v = ht_topology_trial(pts, rng);
        ++trials;
        if (v > best) {
          best = v;
          best_pts = pts;
          report(trials);
        }
        continue;
      }
      if (pick < 0.65) pts = ht_symmetric_start(rng);
      else if (pick < 0.85) pts = ht_structured_start(rng);
      else
        for (int i = 0; i < 11; ++i) pts.push_back(escher::ht_random_point(rng));
    } else if (mode < 7) {  // teleport a point of the binding triple
      pts = best_pts;
      std::size_t binder = 0;
      ht_min_area_abs(pts, &binder);
      const std::size_t moved =
          escher::uniform_unit(rng) < 0.7 ? binder : escher::uniform_index(rng, pts.size());
      pts[moved] = escher::uniform_unit(rng) < 0.5 ? ht_random_boundary_point(rng)
                                                   : escher::ht_random_point(rng);
      if (escher::uniform_unit(rng) < 0.3) {  // occasionally move a second point
        const std::size_t extra = escher::uniform_index(rng, pts.size());
        pts[extra] = escher::ht_random_point(rng);
      }
    } else if (mode < 9) {  // force mirror symmetry on the incumbent
      pts = ht_symmetrize(best_pts);
    } else {  // small shake
      pts = best_pts;
      const double kick = mode == 11 ? 0.03 : 0.006;
      for (auto& p : pts) {
        p.x += escher::normal_sample(rng, 0.0, kick);
        p.y += escher::normal_sample(rng, 0.0, kick);
        escher::ht_project_into_triangle(p);
      }
    }

    double v = ht_optimize(pts, 1600, 3e-3, 1e-6);
    if (v > best * 0.995) v = ht_optimize(pts, 2600, 1e-5, 1e-9);
    ++trials;
    if (v > best) {
      best = v;
      best_pts = pts;
      report(trials);
    }
  }
  if (best > 0) {
    std::vector<Point> polished = best_pts;
    const double v = ht_optimize(polished, 4000, 1e-6, 1e-10);
    if (v > best) {
      best = v;
      best_pts = polished;
      report(trials);
    }
  }
  std::cerr << "ht done: best=" << std::setprecision(17) << best << " trials=" << trials << "\n";
  return best > 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Circle packing: maximize the total radius of 26 circles in the unit square.

using CpState = escher::CpCircles;

double cp_sum(const CpState& s) {
  double t = 0.0;
  for (const Circle& c : s) t += c.r;
  return t;
}

// Dense primal simplex for: maximize sum(r) s.t. r_i + r_j <= d_ij,
// r_i <= border_i, r >= 0.
bool cp_lp_radii(CpState& s) {
  const int n = static_cast<int>(s.size());
  std::vector<std::array<int, 2>> pair_rows;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pair_rows.push_back({i, j});
  const int m = n + static_cast<int>(pair_rows.size());
  const int cols = n + m + 1;
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(cols, 0.0));

  for (int i = 0; i < n; ++i) {
    t[i][i] = 1.0;
    t[i][n + i] = 1.0;
    t[i][cols - 1] = std::max(0.0, escher::circle_border_room(s[i]));
  }
  for (std::size_t p = 0; p < pair_rows.size(); ++p) {
    const int row = n + static_cast<int>(p);
    t[row][pair_rows[p][0]] = 1.0;
    t[row][pair_rows[p][1]] = 1.0;
    t[row][n + row] = 1.0;
    t[row][cols - 1] = std::max(0.0, escher::circle_distance(s[pair_rows[p][0]], s[pair_rows[p][1]]));
  }
  for (int i = 0; i < n; ++i) t[m][i] = -1.0;

  std::vector<int> basis(m);
  std::iota(basis.begin(), basis.end(), n);
  const double eps = 1e-11;
  for (int iter = 0; iter < 20000; ++iter) {
    const bool bland = iter > 5000;
    int pivot_col = -1;
    double best_val = -eps;
    for (int c = 0; c < cols - 1; ++c) {
      if (t[m][c] < best_val) {
        best_val = t[m][c];
        pivot_col = c;
        if (bland) break;
      }
    }
    if (pivot_col < 0) break;
    int pivot_row = -1;
    double best_ratio = 0.0;
    for (int r = 0; r < m; ++r) {
      if (t[r][pivot_col] > eps) {
        const double ratio = t[r][cols - 1] / t[r][pivot_col];
        if (pivot_row < 0 || ratio < best_ratio - 1e-12 ||
            (std::abs(ratio - best_ratio) <= 1e-12 && basis[r] < basis[pivot_row])) {
          pivot_row = r;
          best_ratio = ratio;
        }
      }
    }
    if (pivot_row < 0) return false;
    const double pivot = t[pivot_row][pivot_col];
    for (double& val : t[pivot_row]) val /= pivot;
    for (int r = 0; r <= m; ++r) {
      if (r == pivot_row) continue;
      const double f = t[r][pivot_col];
      if (f == 0.0) continue;
      for (int c = 0; c < cols; ++c) t[r][c] -= f * t[pivot_row][c];
    }
    basis[pivot_row] = pivot_col;
  }

  std::vector<double> out(n, 0.0);
  for (int r = 0; r < m; ++r)
    if (basis[r] < n) out[basis[r]] = std::max(0.0, t[r][cols - 1]);
  for (int i = 0; i < n; ++i) s[i].r = std::max(out[i], 1e-12);
  return true;
}

double cp_finalize(CpState& s) {
  escher::cp_feasibility_shrink(s);
  escher::cp_expand(s, 40);
  CpState lp = s;
  if (cp_lp_radii(lp)) {
    escher::cp_feasibility_shrink(lp);
    escher::cp_expand(lp, 12);
    if (cp_sum(lp) > cp_sum(s)) s = lp;
  }
  return cp_sum(s);
}

// Penalized Adam over centers and radii.
void cp_adam(CpState& s, int steps, double lr0, double lr1, double mu0, double mu1) {
  const std::size_t n = s.size();
  std::vector<double> p(3 * n), m(3 * n, 0.0), v(3 * n, 0.0), g(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    p[3 * i] = s[i].x;
    p[3 * i + 1] = s[i].y;
    p[3 * i + 2] = s[i].r;
  }
  const double b1 = 0.9, b2 = 0.999;
  for (int step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) / std::max(1, steps - 1);
    const double lr = lr0 * std::pow(lr1 / lr0, t);
    const double mu = mu0 * std::pow(mu1 / mu0, t);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) g[3 * i + 2] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = p[3 * i], yi = p[3 * i + 1], ri = p[3 * i + 2];
      struct Side {
        double viol, dxi;
      };
      const Side sides[4] = {{ri - xi, 1.0}, {ri - (1.0 - xi), -1.0}, {0, 0}, {0, 0}};
      if (sides[0].viol > 0) {
        g[3 * i + 2] -= 2 * mu * sides[0].viol;
        g[3 * i] += 2 * mu * sides[0].viol;
      }
      if (sides[1].viol > 0) {
        g[3 * i + 2] -= 2 * mu * sides[1].viol;
        g[3 * i] -= 2 * mu * sides[1].viol;
      }
      const double vb = ri - yi, vt = ri - (1.0 - yi);
      if (vb > 0) {
        g[3 * i + 2] -= 2 * mu * vb;
        g[3 * i + 1] += 2 * mu * vb;
      }
      if (vt > 0) {
        g[3 * i + 2] -= 2 * mu * vt;
        g[3 * i + 1] -= 2 * mu * vt;
      }
      if (ri < 5e-4) g[3 * i + 2] += 2 * mu * (5e-4 - ri) * 0.01;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = xi - p[3 * j], dy = yi - p[3 * j + 1];
        const double d = std::sqrt(dx * dx + dy * dy) + 1e-12;
        const double viol = ri + p[3 * j + 2] - d;
        if (viol > 0) {
          const double w = 2.0 * mu * viol;
          g[3 * i + 2] -= w;
          g[3 * j + 2] -= w;
          g[3 * i] += w * dx / d;
          g[3 * i + 1] += w * dy / d;
          g[3 * j] -= w * dx / d;
          g[3 * j + 1] -= w * dy / d;
        }
      }
    }
    const double c1 = 1.0 / (1.0 - std::pow(b1, step + 1));
    const double c2 = 1.0 / (1.0 - std::pow(b2, step + 1));
    for (std::size_t q = 0; q < p.size(); ++q) {
      m[q] = b1 * m[q] + (1 - b1) * g[q];
      v[q] = b2 * v[q] + (1 - b2) * g[q] * g[q];
      p[q] += lr * (m[q] * c1) / (std::sqrt(v[q] * c2) + 1e-10);
    }
    for (std::size_t i = 0; i < n; ++i) {
      p[3 * i] = std::clamp(p[3 * i], 0.0, 1.0);
      p[3 * i + 1] = std::clamp(p[3 * i + 1], 0.0, 1.0);
      p[3 * i + 2] = std::clamp(p[3 * i + 2], 1e-6, 0.5);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    s[i].x = p[3 * i];
    s[i].y = p[3 * i + 1];
    s[i].r = p[3 * i + 2];
  }
}

// Contact-force relaxation: every circle drifts away from whatever blocks it,
// radii refreshed greedily; keeps whatever configuration scored best.
double cp_force_relax(CpState& s, int steps, double eta0, double eta1) {
  CpState best_state = s;
  double best = cp_finalize(best_state);
  CpState cur = best_state;
  const std::size_t n = cur.size();
  for (int step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) / std::max(1, steps - 1);
    const double eta = eta0 * std::pow(eta1 / eta0, t);
    std::vector<Point> force(n, Point{0, 0});
    for (std::size_t i = 0; i < n; ++i) {
      const double slack_tol = std::max(1e-7, cur[i].r * 1e-4);
      if (cur[i].x - cur[i].r < slack_tol) force[i].x += 1.0;
      if (1.0 - cur[i].x - cur[i].r < slack_tol) force[i].x -= 1.0;
      if (cur[i].y - cur[i].r < slack_tol) force[i].y += 1.0;
      if (1.0 - cur[i].y - cur[i].r < slack_tol) force[i].y -= 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d = escher::circle_distance(cur[i], cur[j]);
        if (d - cur[i].r - cur[j].r < slack_tol && d > 1e-12) {
          force[i].x += (cur[i].x - cur[j].x) / d;
          force[i].y += (cur[i].y - cur[j].y) / d;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      cur[i].x = std::clamp(cur[i].x + eta * force[i].x, 0.0, 1.0);
      cur[i].y = std::clamp(cur[i].y + eta * force[i].y, 0.0, 1.0);
    }
    escher::cp_feasibility_shrink(cur);
    escher::cp_expand(cur, 6);
    const double val = cp_sum(cur);
    if (val > best) {
      best = val;
      best_state = cur;
    }
  }
  s = best_state;
  return cp_finalize(s);
}

CpState cp_random_init(Rng& rng) {
  CpState s(26);
  const int style = static_cast<int>(escher::uniform_index(rng, 3));
  if (style == 0) {
    for (Circle& c : s) {
      c.x = escher::uniform_unit(rng);
      c.y = escher::uniform_unit(rng);
      const double u = escher::uniform_unit(rng);
      c.r = 0.01 + 0.11 * u * u;
    }
  } else if (style == 1) {  // jittered 5x5 grid + one extra
    std::size_t idx = 0;
    for (int row = 0; row < 5; ++row)
      for (int col = 0; col < 5; ++col) {
        s[idx].x = 0.1 + 0.2 * col + escher::normal_sample(rng, 0.0, 0.02);
        s[idx].y = 0.1 + 0.2 * row + escher::normal_sample(rng, 0.0, 0.02);
        s[idx].r = 0.09;
        ++idx;
      }
    s[25] = Circle{escher::uniform_unit(rng), escher::uniform_unit(rng), 0.04};
  } else {  // a few large circles then fill
    for (int i = 0; i < 4; ++i)
      s[i] = Circle{0.22 + 0.56 * escher::uniform_unit(rng),
                    0.22 + 0.56 * escher::uniform_unit(rng), 0.14 + 0.1 * escher::uniform_unit(rng)};
    for (int i = 4; i < 26; ++i)
      s[i] = Circle{escher::uniform_unit(rng), escher::uniform_unit(rng), 0.03};
  }
  for (Circle& c : s) {
    c.x = std::clamp(c.x, 0.0, 1.0);
    c.y = std::clamp(c.y, 0.0, 1.0);
  }
  return s;
}

int run_cp(std::uint64_t seed, double seconds, const std::string& out_path,
           const std::string& resume_path) {
  Rng rng(seed);
  double best = -1.0;
  CpState best_state;

  auto report = [&](long trial) {
    Construction c;
    c.data = best_state;
    write_json(out_path, escher::construction_to_json(c));
    std::cerr << "cp trial " << trial << ": new best " << std::setprecision(12) << best << "\n";
  };

  if (!resume_path.empty()) {
    std::ifstream in(resume_path);
    nlohmann::json j;
    in >> j;
    best_state = escher::construction_from_json(j).circles();
    best = cp_sum(best_state);
    std::cerr << "cp resume: " << std::setprecision(12) << best << "\n";
  }

  long trials = 0;
  while (now_seconds() < seconds) {
    CpState s;
    const int mode = best < 0 ? 0 : static_cast<int>(trials % 8);
    if (mode == 0) {
      s = cp_random_init(rng);
      cp_adam(s, 2600, 8e-3, 3e-5, 1e2, 1e7);
    } else if (mode <= 3) {  // relocate the smallest circles
      s = best_state;
      const int k = 1 + static_cast<int>(escher::uniform_index(rng, 3));
      for (int move = 0; move < k; ++move) {
        std::size_t victim = 0;
        for (std::size_t i = 1; i < s.size(); ++i)
          if (s[i].r < s[victim].r) victim = i;
        s[victim] = Circle{escher::uniform_unit(rng), escher::uniform_unit(rng), 0.03};
      }
      cp_adam(s, 900, 2e-3, 2e-5, 1e3, 1e7);
    } else if (mode <= 6) {  // shake everything a little
      s = best_state;
      const double kick = mode == 6 ? 0.02 : 0.005;
      for (Circle& c : s) {
        c.x = std::clamp(c.x + escher::normal_sample(rng, 0.0, kick), 0.0, 1.0);
        c.y = std::clamp(c.y + escher::normal_sample(rng, 0.0, kick), 0.0, 1.0);
      }
      cp_adam(s, 900, 2e-3, 2e-5, 1e3, 1e7);
    } else {  // pure relaxation pass over the incumbent
      s = best_state;
    }
    double v = cp_force_relax(s, 320, 2e-3, 2e-5);
    ++trials;
    if (v > best) {
      best = v;
      best_state = s;
      report(trials);
    }
  }
  std::cerr << "cp done: best=" << std::setprecision(12) << best << " trials=" << trials << "\n";
  return best > 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// fit: rescale a solution so its evaluator score equals the target exactly.

int run_fit(const std::string& in_path, double target, const std::string& out_path) {
  std::ifstream in(in_path);
  nlohmann::json j;
  in >> j;
  Construction c = escher::construction_from_json(j);

  if (c.task() == TaskDomain::CP) {
    auto circles = c.circles();
    double sum = 0.0;
    for (const Circle& circ : circles) sum += circ.r;
    if (sum < target) {
      std::cerr << "fit: current sum " << std::setprecision(12) << sum << " below target\n";
      return 1;
    }
    const double k = target / sum;
    for (Circle& circ : circles) circ.r *= k;
    c.data = circles;
  } else if (c.task() == TaskDomain::HT) {
    auto pts = c.points();
    const double current = ht_min_area_abs(pts) / escher::kHtDomainArea;
    if (current < target) {
      std::cerr << "fit: current normalized min area " << std::setprecision(17) << current
                << " below target\n";
      return 1;
    }
    // Areas scale with the square of the contraction about the centroid.
    const double lambda = std::sqrt(target / current);
    const Point g{0.5, escher::kSqrt3 / 6.0};
    for (Point& p : pts) {
      p.x = g.x + lambda * (p.x - g.x);
      p.y = g.y + lambda * (p.y - g.y);
    }
    c.data = pts;
  } else {
    std::cerr << "fit: only cp and ht solutions can be rescaled\n";
    return 1;
  }

  const auto spec = escher::TaskSpec::defaults(c.task());
  const auto result = escher::evaluate_construction(c, spec);
  std::cerr << "fit: valid=" << result.valid << " s_raw=" << std::setprecision(17) << result.s_raw
            << " s_norm=" << result.s_norm << "\n";
  if (!result.valid) return 1;
  write_json(out_path, escher::construction_to_json(c));
  return std::abs(result.s_raw - target) <= std::abs(target) * 1e-9 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"offline construction search"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  double seconds = 60.0;
  int restarts = 64;
  std::string out_path = "construction.json";
  std::string in_path;
  std::string resume_path;
  double target = 0.0;

  auto* kn = app.add_subcommand("kn", "kissing number search");
  kn->add_option("--seed", seed);
  kn->add_option("--restarts", restarts);
  kn->add_option("--out", out_path);

  auto* ht = app.add_subcommand("ht", "heilbronn triangle search");
  ht->add_option("--seed", seed);
  ht->add_option("--seconds", seconds);
  ht->add_option("--out", out_path);
  ht->add_option("--resume", resume_path);

  auto* cp = app.add_subcommand("cp", "circle packing search");
  cp->add_option("--seed", seed);
  cp->add_option("--seconds", seconds);
  cp->add_option("--out", out_path);
  cp->add_option("--resume", resume_path);

  auto* fit = app.add_subcommand("fit", "rescale a solution to an exact target score");
  fit->add_option("--in", in_path)->required();
  fit->add_option("--target", target)->required();
  fit->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(kn)) return run_kn(seed, restarts, out_path);
  if (app.got_subcommand(ht)) return run_ht(seed, seconds, out_path, resume_path);
  if (app.got_subcommand(cp)) return run_cp(seed, seconds, out_path, resume_path);
  if (app.got_subcommand(fit)) return run_fit(in_path, target, out_path);
  return 2;
}
