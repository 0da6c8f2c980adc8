#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "escher/agents.hpp"
#include "escher/rng.hpp"

namespace escher {

// One request to an optimizer agent: transform the scored parents into a new
// candidate of `target_kind`. Token counts feed the budget ledger.
struct GenerationRequest {
  AgentRecord operator_agent;                       // the acting optimizer
  std::vector<std::pair<std::string, double>> parents;  // (payload, score)
  AgentKind target_kind = AgentKind::Task;
  double temperature = 0.7;
  int max_output_tokens = 60000;
  double timeout_s = 700.0;
  int retries = 3;
};

struct GenerationResult {
  bool ok = false;
  std::string payload;
  std::int64_t tokens_in = 0;   // summed over every attempt, failed ones included
  std::int64_t tokens_out = 0;
  std::string backend_label;
  std::string error;
};

struct EndpointProfile {
  std::string name;
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string model;
  double weight = 1.0;
  std::string api_key_env = "ESCHER_API_KEY";
  nlohmann::json extra;  // provider-specific fields passed through verbatim
};

enum class BackendMode { Scripted, RemoteChat };

struct BackendConfig {
  BackendMode mode = BackendMode::Scripted;
  std::vector<EndpointProfile> routing;  // weights must sum to 1
  double task_temperature = 0.7;
  double optimizer_temperature = 1.0;
  double task_timeout_s = 700.0;
  double optimizer_timeout_s = 1200.0;
  int retries = 3;
  int max_output_tokens = 60000;

  void validate() const {
    if (mode == BackendMode::RemoteChat) {
      if (routing.empty()) throw Error("backend: remote mode needs at least one profile");
      double total = 0.0;
      for (const auto& p : routing) {
        if (p.weight < 0) throw Error("backend: negative routing weight");
        total += p.weight;
      }
      if (std::abs(total - 1.0) > 1e-9) throw Error("backend: routing weights must sum to 1");
    }
  }
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual GenerationResult generate(const GenerationRequest& req, Rng& rng) = 0;
  virtual std::string label() const = 0;
};

inline std::int64_t synthetic_token_count(const std::string& payload) {
  return static_cast<std::int64_t>((payload.size() + 3) / 4);
}

}  // namespace escher
