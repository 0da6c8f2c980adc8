#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "escher/agents.hpp"

namespace escher {

inline constexpr double kInitialElo = 1200.0;
inline constexpr double kDefaultKFactor = 32.0;
inline constexpr double kDefaultDrawTol = 1e-9;

// Result of one benchmarking round: antisymmetric win/loss/draw matrix over
// the sampled cohort, derived from the round's task scores.
struct ResultMatrix {
  std::vector<std::vector<int>> w;   // entries in {-1, 0, +1}
  std::vector<AgentId> cohort;       // ids aligned with matrix indices
  std::vector<double> round_scores;  // task scores the signals came from
};

// W[i][j] = +1 when score i beats score j beyond the draw tolerance.
inline ResultMatrix pairwise_competition(std::span<const double> round_scores,
                                         double draw_tol = kDefaultDrawTol) {
  if (round_scores.size() < 2) throw Error("pairwise_competition: need at least 2 scores");
  for (double s : round_scores)
    if (!std::isfinite(s)) throw Error("pairwise_competition: non-finite score");

  const std::size_t n = round_scores.size();
  ResultMatrix result;
  result.round_scores.assign(round_scores.begin(), round_scores.end());
  result.w.assign(n, std::vector<int>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      int v = 0;
      if (round_scores[i] > round_scores[j] + draw_tol) v = 1;
      else if (round_scores[j] > round_scores[i] + draw_tol) v = -1;
      result.w[i][j] = v;
      result.w[j][i] = -v;
    }
  }
  return result;
}

struct EloHistoryEntry {
  std::int64_t iteration = 0;
  AgentId id = 0;
  double old_rating = 0.0;
  double new_rating = 0.0;
};

// Optimizer ratings plus the append-only update history. Ratings of evicted
// optimizers are dropped from the live map; their trajectory survives in the
// history and the run log.
class EloLedger {
 public:
  explicit EloLedger(double k_factor = kDefaultKFactor) : k_factor_(k_factor) {
    if (!(k_factor_ > 0.0)) throw Error("EloLedger: k_factor must be positive");
  }

  double k_factor() const { return k_factor_; }
  const std::map<AgentId, double>& ratings() const { return ratings_; }
  const std::vector<EloHistoryEntry>& history() const { return history_; }

  bool has(AgentId id) const { return ratings_.count(id) != 0; }

  double rating(AgentId id) const {
    auto it = ratings_.find(id);
    if (it == ratings_.end()) throw Error("EloLedger: unknown optimizer id " + std::to_string(id));
    return it->second;
  }

  void add(AgentId id, double rating = kInitialElo) {
    if (has(id)) throw Error("EloLedger: id already rated " + std::to_string(id));
    ratings_[id] = rating;
  }

  void erase(AgentId id) { ratings_.erase(id); }

  // Applies the round sequentially over pairs (i, j), i < j, in ascending
  // index order; updated ratings feed the later pairs of the same round.
  // History records one entry per cohort member with its net round change.
  std::vector<EloHistoryEntry> apply(const ResultMatrix& result, std::int64_t iteration) {
    const std::size_t n = result.cohort.size();
    if (n != result.w.size()) throw Error("EloLedger: cohort/matrix size mismatch");
    std::vector<double> before(n);
    for (std::size_t i = 0; i < n; ++i) before[i] = rating(result.cohort[i]);

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double& ri = ratings_[result.cohort[i]];
        double& rj = ratings_[result.cohort[j]];
        const double expected_i = 1.0 / (1.0 + std::pow(10.0, (rj - ri) / 400.0));
        const double actual_i = result.w[i][j] > 0 ? 1.0 : (result.w[i][j] < 0 ? 0.0 : 0.5);
        const double delta = k_factor_ * (actual_i - expected_i);
        ri += delta;
        rj += -delta;
      }
    }

    std::vector<EloHistoryEntry> round;
    round.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      EloHistoryEntry e{iteration, result.cohort[i], before[i], ratings_[result.cohort[i]]};
      history_.push_back(e);
      round.push_back(e);
    }
    return round;
  }

  nlohmann::json to_json() const {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& [id, rating] : ratings_)
      r.push_back(nlohmann::json{{"id", id}, {"rating", rating}});
    nlohmann::json h = nlohmann::json::array();
    for (const auto& e : history_)
      h.push_back(nlohmann::json{
          {"iteration", e.iteration}, {"id", e.id}, {"old", e.old_rating}, {"new", e.new_rating}});
    return nlohmann::json{{"k_factor", k_factor_}, {"ratings", std::move(r)}, {"history", std::move(h)}};
  }

  static EloLedger from_json(const nlohmann::json& j) {
    EloLedger ledger(j.at("k_factor").get<double>());
    for (const auto& item : j.at("ratings"))
      ledger.ratings_[item.at("id").get<AgentId>()] = item.at("rating").get<double>();
    for (const auto& item : j.at("history"))
      ledger.history_.push_back(EloHistoryEntry{item.at("iteration").get<std::int64_t>(),
                                                item.at("id").get<AgentId>(),
                                                item.at("old").get<double>(),
                                                item.at("new").get<double>()});
    return ledger;
  }

 private:
  double k_factor_;
  std::map<AgentId, double> ratings_;
  std::vector<EloHistoryEntry> history_;
};

// New optimizers start from the arithmetic mean of their predecessors.
inline double initialize_offspring_rating(std::span<const double> parent_ratings) {
  if (parent_ratings.empty()) throw Error("initialize_offspring_rating: empty parent list");
  double sum = 0.0;
  for (double r : parent_ratings) sum += r;
  return sum / static_cast<double>(parent_ratings.size());
}

}  // namespace escher
