#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "escher/generation.hpp"
#include "escher/geometry_ops.hpp"

namespace escher {

// A scripted optimizer payload is a small strategy document, e.g.
//   {"op":"gaussian-perturb","sigma":0.01,"restart_p":0.05,
//    "kn_tries":24,"meta_op":"jitter-params","meta_factor":1.5}
// Task generation perturbs the best parent construction and repairs it;
// optimizer generation rewrites the numeric parameters of the best parent
// strategy. Everything is deterministic under a fixed seed, which gives the
// loop a ground-truth ordering of optimizer strength for testing.
struct ScriptedStrategy {
  std::string op = "gaussian-perturb";
  double sigma = 0.01;
  double restart_p = 0.05;
  int kn_tries = 24;
  std::string meta_op = "jitter-params";
  double meta_factor = 1.5;

  static ScriptedStrategy parse(const std::string& payload) {
    nlohmann::json j = nlohmann::json::parse(payload, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("op"))
      throw Error("malformed strategy document");
    ScriptedStrategy s;
    s.op = j.at("op").get<std::string>();
    if (s.op != "gaussian-perturb") throw Error("unknown strategy op: " + s.op);
    if (j.contains("sigma")) s.sigma = j.at("sigma").get<double>();
    if (j.contains("restart_p")) s.restart_p = j.at("restart_p").get<double>();
    if (j.contains("kn_tries")) s.kn_tries = j.at("kn_tries").get<int>();
    if (j.contains("meta_op")) s.meta_op = j.at("meta_op").get<std::string>();
    if (j.contains("meta_factor")) s.meta_factor = j.at("meta_factor").get<double>();
    if (!(s.sigma > 0.0) || !std::isfinite(s.sigma)) throw Error("strategy sigma must be positive");
    if (s.restart_p < 0.0 || s.restart_p > 1.0) throw Error("strategy restart_p out of range");
    if (s.kn_tries < 1) throw Error("strategy kn_tries must be positive");
    return s;
  }

  std::string dump() const {
    return nlohmann::json{{"op", op},
                          {"sigma", sigma},
                          {"restart_p", restart_p},
                          {"kn_tries", kn_tries},
                          {"meta_op", meta_op},
                          {"meta_factor", meta_factor}}
        .dump();
  }
};

class ScriptedBackend : public GenerationBackend {
 public:
  std::string label() const override { return "scripted"; }

  GenerationResult generate(const GenerationRequest& req, Rng& rng) override {
    GenerationResult result;
    result.backend_label = label();

    ScriptedStrategy strategy;
    try {
      strategy = ScriptedStrategy::parse(req.operator_agent.payload);
    } catch (const Error& e) {
      result.error = e.what();
      return result;  // failure attributed to the operator
    }
    if (req.parents.empty()) {
      result.error = "no parents provided";
      return result;
    }

    try {
      result.payload = req.target_kind == AgentKind::Task
                           ? mutate_task(strategy, best_parent(req.parents), rng)
                           : mutate_strategy(strategy, best_parent(req.parents), rng);
    } catch (const Error& e) {
      result.error = e.what();
      return result;
    }
    result.ok = true;
    result.tokens_in = synthetic_token_count(result.payload);
    result.tokens_out = synthetic_token_count(result.payload);
    return result;
  }

 private:
  static const std::string& best_parent(
      const std::vector<std::pair<std::string, double>>& parents) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < parents.size(); ++i)
      if (parents[i].second > parents[best].second) best = i;
    return parents[best].first;
  }

  static std::string mutate_task(const ScriptedStrategy& strategy, const std::string& parent,
                                 Rng& rng) {
    Construction c;
    try {
      c = parse_construction(parent);
    } catch (const ConstructionParseError&) {
      throw Error("parent payload is not a literal construction");
    }
    const bool restart = uniform_unit(rng) < strategy.restart_p;
    switch (c.task()) {
      case TaskDomain::CP: {
        CpCircles circles = restart ? random_cp(rng) : c.circles();
        if (!restart) {
          // localized moves: jitter a subset, sometimes re-seat the smallest
          for (Circle& circ : circles) {
            if (uniform_unit(rng) >= 0.4) continue;
            circ.x = std::clamp(circ.x + normal_sample(rng, 0.0, strategy.sigma), 0.0, 1.0);
            circ.y = std::clamp(circ.y + normal_sample(rng, 0.0, strategy.sigma), 0.0, 1.0);
          }
          if (!circles.empty() && uniform_unit(rng) < 0.25) {
            std::size_t smallest = 0;
            for (std::size_t i = 1; i < circles.size(); ++i)
              if (circles[i].r < circles[smallest].r) smallest = i;
            circles[smallest] =
                Circle{uniform_unit(rng), uniform_unit(rng), 1e-3};
          }
        }
        cp_feasibility_shrink(circles);
        cp_expand(circles);
        c.data = std::move(circles);
        break;
      }
      case TaskDomain::HT: {
        HtPoints pts = restart ? random_ht(rng) : c.points();
        if (!restart) {
          for (Point& p : pts) {
            p.x += normal_sample(rng, 0.0, strategy.sigma);
            p.y += normal_sample(rng, 0.0, strategy.sigma);
            ht_project_into_triangle(p);
          }
        }
        c.data = std::move(pts);
        break;
      }
      case TaskDomain::KN: {
        KnVectors vectors = restart ? base_kn() : c.vectors();
        if (!restart && !vectors.empty() && uniform_unit(rng) < 0.25)
          vectors.erase(vectors.begin() +
                        static_cast<std::ptrdiff_t>(uniform_index(rng, vectors.size())));
        for (int t = 0; t < strategy.kn_tries; ++t) {
          const auto cand = kn_random_candidate(rng);
          bool fits = true;
          for (const auto& v : vectors)
            if (!kn_compatible(cand, v)) {
              fits = false;
              break;
            }
          if (fits) vectors.push_back(cand);
        }
        c.data = std::move(vectors);
        break;
      }
    }
    return dump_construction(c);
  }

  static std::string mutate_strategy(const ScriptedStrategy& actor, const std::string& parent,
                                     Rng& rng) {
    ScriptedStrategy offspring = ScriptedStrategy::parse(parent);
    if (actor.meta_op == "scale-sigma") {
      offspring.sigma *= actor.meta_factor;
    } else if (actor.meta_op == "jitter-params") {
      const double spread = std::log(std::max(actor.meta_factor, 1.05));
      offspring.sigma *= std::exp(normal_sample(rng, 0.0, spread));
      offspring.sigma = std::clamp(offspring.sigma, 1e-6, 0.5);
      offspring.restart_p =
          std::clamp(offspring.restart_p + normal_sample(rng, 0.0, 0.02), 0.0, 0.5);
      if (uniform_unit(rng) < 0.25) {
        const double scale = std::exp(normal_sample(rng, 0.0, 0.35));
        offspring.kn_tries =
            std::max(1, static_cast<int>(std::lround(offspring.kn_tries * scale)));
      }
    } else {
      throw Error("unknown meta_op: " + actor.meta_op);
    }
    return offspring.dump();
  }

  static CpCircles random_cp(Rng& rng) {
    CpCircles circles(26);
    for (Circle& c : circles) {
      c.x = uniform_unit(rng);
      c.y = uniform_unit(rng);
      c.r = 1e-9;
    }
    cp_expand(circles);
    return circles;
  }

  static HtPoints random_ht(Rng& rng) {
    HtPoints pts;
    pts.reserve(11);
    for (int i = 0; i < 11; ++i) pts.push_back(ht_random_point(rng));
    return pts;
  }

  static KnVectors base_kn() {
    KnVectors vectors;
    for (int i = 0; i < 11; ++i) {
      std::vector<std::int64_t> v(11, 0);
      v[i] = 2;
      vectors.push_back(v);
      v[i] = -2;
      vectors.push_back(v);
    }
    return vectors;
  }
};

}  // namespace escher
