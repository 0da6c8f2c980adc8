#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "escher/agents.hpp"
#include "escher/population.hpp"
#include "escher/rng.hpp"

namespace escher {

// Every selection in the loop goes through the same rank-based softmax; only
// the temperature differs by role.
enum class SamplerRole { TaskParent, Matchmaking, Mentoring, Checkpoint };

inline double default_temperature(SamplerRole role) {
  switch (role) {
    case SamplerRole::Mentoring: return 0.5;
    case SamplerRole::TaskParent:
    case SamplerRole::Matchmaking:
    case SamplerRole::Checkpoint: return 1.2;
  }
  return 1.2;
}

struct SamplerConfig {
  SamplerRole role = SamplerRole::Matchmaking;
  double temperature = 1.2;

  static SamplerConfig for_role(SamplerRole role) {
    return SamplerConfig{role, default_temperature(role)};
  }
};

// P(i) = exp(-rank(i)/tau) / sum_j exp(-rank(j)/tau), rank 0 for the highest
// score. Ties take the earlier list position. Probabilities depend only on
// the ordering of the scores, never on their magnitudes.
inline std::vector<double> rank_softmax_probs(std::span<const double> scores, double tau) {
  if (scores.empty()) throw Error("rank_softmax_probs: empty candidate set");
  if (!(tau > 0.0)) throw Error("rank_softmax_probs: temperature must be positive");
  for (double s : scores)
    if (!std::isfinite(s)) throw Error("rank_softmax_probs: non-finite score");

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<double> probs(n, 0.0);
  double total = 0.0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    const double w = std::exp(-static_cast<double>(rank) / tau);
    probs[order[rank]] = w;
    total += w;
  }
  for (double& p : probs) p /= total;
  return probs;
}

// One categorical draw; `probs` must sum to ~1.
inline std::size_t draw_categorical(std::span<const double> probs, Rng& rng) {
  const double u = uniform_unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

// k distinct indices drawn without replacement by repeated rank-softmax draws
// with renormalization after each removal. Result order is draw order.
inline std::vector<std::size_t> sample_indices(std::span<const double> scores, std::size_t k,
                                               double tau, Rng& rng) {
  if (k > scores.size()) throw Error("sample_indices: k exceeds candidate count");
  std::vector<std::size_t> remaining(scores.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::vector<double> pool;
  for (std::size_t round = 0; round < k; ++round) {
    pool.clear();
    for (std::size_t idx : remaining) pool.push_back(scores[idx]);
    const std::vector<double> probs = rank_softmax_probs(pool, tau);
    const std::size_t choice = draw_categorical(probs, rng);
    picked.push_back(remaining[choice]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(choice));
  }
  return picked;
}

// Draws k distinct members. First draw is the lead when role = Mentoring.
inline std::vector<AgentRecord> sample_subset(const Population& pop, std::size_t k,
                                              const SamplerConfig& cfg, Rng& rng) {
  const std::vector<double> scores = pop.scores();
  const std::vector<std::size_t> idx = sample_indices(scores, k, cfg.temperature, rng);
  std::vector<AgentRecord> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(pop.members()[i]);
  return out;
}

}  // namespace escher
