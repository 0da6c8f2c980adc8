#include <array>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "escher/rating.hpp"
#include "escher/rng.hpp"

using escher::EloLedger;
using escher::pairwise_competition;
using escher::ResultMatrix;

TEST_CASE("pairwise competition on ordered and drawn scores") {
  SUBCASE("strict ordering") {
    const std::array<double, 2> scores{0.9, 0.5};
    const auto r = pairwise_competition(scores, 1e-9);
    CHECK(r.w[0][1] == 1);
    CHECK(r.w[1][0] == -1);
    CHECK(r.w[0][0] == 0);
  }
  SUBCASE("exact draw") {
    const std::array<double, 2> scores{0.7, 0.7};
    const auto r = pairwise_competition(scores, 1e-9);
    CHECK(r.w[0][1] == 0);
    CHECK(r.w[1][0] == 0);
  }
  SUBCASE("three-way round robin") {
    const std::array<double, 3> scores{0.9, 0.5, 0.9};
    const auto r = pairwise_competition(scores, 1e-9);
    CHECK(r.w[0][2] == 0);
    CHECK(r.w[2][0] == 0);
    CHECK(r.w[0][1] == 1);
    CHECK(r.w[2][1] == 1);
    CHECK(r.w[1][0] == -1);
    CHECK(r.w[1][2] == -1);
  }
  SUBCASE("antisymmetry on random scores") {
    escher::Rng rng(3);
    for (int round = 0; round < 100; ++round) {
      std::vector<double> scores;
      const std::size_t n = 2 + escher::uniform_index(rng, 6);
      for (std::size_t i = 0; i < n; ++i)
        scores.push_back(escher::uniform_index(rng, 5) / 4.0);  // many ties
      const auto r = pairwise_competition(scores, 1e-9);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(r.w[i][i] == 0);
        for (std::size_t j = 0; j < n; ++j) CHECK(r.w[i][j] == -r.w[j][i]);
      }
    }
  }
  SUBCASE("fewer than two scores is an error") {
    const std::array<double, 1> one{0.5};
    CHECK_THROWS_AS(pairwise_competition(one, 1e-9), escher::Error);
  }
}

namespace {

ResultMatrix round_result(std::vector<escher::AgentId> cohort, std::vector<double> scores,
                          double tol = 1e-9) {
  ResultMatrix r = pairwise_competition(scores, tol);
  r.cohort = std::move(cohort);
  return r;
}

}  // namespace

TEST_CASE("symmetric win moves exactly K/2 at equal ratings") {
  EloLedger ledger(32.0);
  ledger.add(1);
  ledger.add(2);
  ledger.apply(round_result({1, 2}, {0.8, 0.2}), 1);
  CHECK(ledger.rating(1) == doctest::Approx(1216.0).epsilon(1e-12));
  CHECK(ledger.rating(2) == doctest::Approx(1184.0).epsilon(1e-12));
}

TEST_CASE("a draw between equals changes nothing") {
  EloLedger ledger;
  ledger.add(1);
  ledger.add(2);
  ledger.apply(round_result({1, 2}, {0.5, 0.5}), 1);
  CHECK(ledger.rating(1) == 1200.0);
  CHECK(ledger.rating(2) == 1200.0);
}

TEST_CASE("upset win gains follow the logistic expectation") {
  EloLedger ledger(32.0);
  ledger.add(1, 1400.0);
  ledger.add(2, 1200.0);
  ledger.apply(round_result({1, 2}, {0.1, 0.9}), 1);
  // hand-evaluated: E_low = 1/(1+10^(200/400)), gain = 32*(1-E_low) = 24.3119...
  const double expected_gain = 32.0 * (1.0 - 1.0 / (1.0 + std::pow(10.0, 200.0 / 400.0)));
  CHECK(expected_gain == doctest::Approx(24.3119).epsilon(1e-4));
  CHECK(ledger.rating(2) == doctest::Approx(1200.0 + expected_gain).epsilon(1e-12));
  CHECK(ledger.rating(1) == doctest::Approx(1400.0 - expected_gain).epsilon(1e-12));
}

TEST_CASE("unknown cohort ids are rejected") {
  EloLedger ledger;
  ledger.add(1);
  CHECK_THROWS_AS(ledger.apply(round_result({1, 99}, {0.4, 0.6}), 1), escher::Error);
}

TEST_CASE("rounds are zero-sum and per-pair changes are bounded by K") {
  escher::Rng rng(7);
  EloLedger ledger(32.0);
  for (escher::AgentId id = 0; id < 30; ++id)
    ledger.add(id, 1000.0 + 40.0 * static_cast<double>(escher::uniform_index(rng, 11)));

  for (int round = 0; round < 500; ++round) {
    const std::size_t k = 2 + escher::uniform_index(rng, 5);
    std::vector<escher::AgentId> cohort;
    while (cohort.size() < k) {
      const escher::AgentId cand = escher::uniform_index(rng, 30);
      if (std::find(cohort.begin(), cohort.end(), cand) == cohort.end()) cohort.push_back(cand);
    }
    std::vector<double> scores;
    for (std::size_t i = 0; i < k; ++i) scores.push_back(escher::uniform_index(rng, 4) / 3.0);

    double before = 0.0;
    for (const auto& [id, rating] : ledger.ratings()) before += rating;
    const auto entries = ledger.apply(round_result(cohort, scores), round);
    double after = 0.0;
    for (const auto& [id, rating] : ledger.ratings()) after += rating;

    CHECK(std::abs(after - before) <= 1e-9);
    // net per-member change is bounded by K per opponent
    for (const auto& e : entries)
      CHECK(std::abs(e.new_rating - e.old_rating) <= 32.0 * static_cast<double>(k - 1) + 1e-12);
  }
}

TEST_CASE("history records net per-round changes") {
  EloLedger ledger(32.0);
  ledger.add(1);
  ledger.add(2);
  ledger.add(3);
  const auto entries = ledger.apply(round_result({1, 2, 3}, {0.9, 0.5, 0.1}), 4);
  REQUIRE(entries.size() == 3);
  for (const auto& e : entries) {
    CHECK(e.iteration == 4);
    CHECK(e.new_rating == ledger.rating(e.id));
  }
  CHECK(ledger.history().size() == 3);
  // deterministic pair order: same inputs, same outputs
  EloLedger again(32.0);
  again.add(1);
  again.add(2);
  again.add(3);
  const auto repeat = again.apply(round_result({1, 2, 3}, {0.9, 0.5, 0.1}), 4);
  for (std::size_t i = 0; i < 3; ++i) CHECK(repeat[i].new_rating == entries[i].new_rating);
}

TEST_CASE("offspring ratings start at the parent mean") {
  CHECK(escher::initialize_offspring_rating(std::array<double, 1>{1200.0}) == 1200.0);
  CHECK(escher::initialize_offspring_rating(std::array<double, 2>{1250.0, 1150.0}) == 1200.0);
  CHECK(escher::initialize_offspring_rating(std::array<double, 3>{1300.0, 1240.0, 1210.0}) ==
        doctest::Approx(1250.0).epsilon(1e-15));
  CHECK_THROWS_AS(escher::initialize_offspring_rating({}), escher::Error);
}

TEST_CASE("ledger serialization round-trips ratings and history") {
  EloLedger ledger(32.0);
  ledger.add(1);
  ledger.add(2);
  ledger.apply(round_result({1, 2}, {1.0, 0.0}), 9);
  const EloLedger back = EloLedger::from_json(ledger.to_json());
  CHECK(back.k_factor() == 32.0);
  CHECK(back.rating(1) == ledger.rating(1));
  CHECK(back.history().size() == 2);
  CHECK(back.history()[0].iteration == 9);
}
