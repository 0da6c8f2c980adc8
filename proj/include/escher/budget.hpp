#pragma once

#include <cstdint>

#include "json.hpp"

namespace escher {

// Unified compute accounting: input tokens are worth a quarter of output
// tokens, so T_eq = T_out + 0.25 * T_in.
struct BudgetLedger {
  std::int64_t tokens_in_total = 0;
  std::int64_t tokens_out_total = 0;
  double budget_eq = 10'000'000.0;

  void charge(std::int64_t tokens_in, std::int64_t tokens_out) {
    tokens_in_total += tokens_in;
    tokens_out_total += tokens_out;
  }

  double equivalent_tokens() const {
    return static_cast<double>(tokens_out_total) + 0.25 * static_cast<double>(tokens_in_total);
  }

  bool exhausted() const { return equivalent_tokens() >= budget_eq; }

  nlohmann::json to_json() const {
    return nlohmann::json{{"tokens_in_total", tokens_in_total},
                          {"tokens_out_total", tokens_out_total},
                          {"budget_eq", budget_eq}};
  }

  static BudgetLedger from_json(const nlohmann::json& j) {
    BudgetLedger b;
    b.tokens_in_total = j.at("tokens_in_total").get<std::int64_t>();
    b.tokens_out_total = j.at("tokens_out_total").get<std::int64_t>();
    b.budget_eq = j.at("budget_eq").get<double>();
    return b;
  }
};

}  // namespace escher
