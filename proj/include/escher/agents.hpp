#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace escher {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class AgentKind { Task, Optimizer };

inline const char* to_string(AgentKind kind) {
  return kind == AgentKind::Task ? "task" : "optimizer";
}

inline AgentKind agent_kind_from_string(const std::string& text) {
  if (text == "task") return AgentKind::Task;
  if (text == "optimizer") return AgentKind::Optimizer;
  throw Error("unknown agent kind: " + text);
}

using AgentId = std::uint64_t;

// One member of either population. `payload` is opaque to the engine: a
// literal construction document or a program for task agents, a strategy
// document or prompt-builder template for optimizer agents. `score` is the
// normalized task score for task agents and the Elo rating for optimizers.
struct AgentRecord {
  AgentId id = 0;
  AgentKind kind = AgentKind::Task;
  std::string payload;
  double score = 0.0;
  std::vector<AgentId> parent_ids;
  std::int64_t created_at_iteration = 0;
  std::int64_t eval_count = 0;
};

inline nlohmann::json to_json(const AgentRecord& rec) {
  return nlohmann::json{{"id", rec.id},
                        {"kind", to_string(rec.kind)},
                        {"payload", rec.payload},
                        {"score", rec.score},
                        {"parent_ids", rec.parent_ids},
                        {"created_at_iteration", rec.created_at_iteration},
                        {"eval_count", rec.eval_count}};
}

inline AgentRecord agent_from_json(const nlohmann::json& j) {
  AgentRecord rec;
  rec.id = j.at("id").get<AgentId>();
  rec.kind = agent_kind_from_string(j.at("kind").get<std::string>());
  rec.payload = j.at("payload").get<std::string>();
  rec.score = j.at("score").get<double>();
  rec.parent_ids = j.at("parent_ids").get<std::vector<AgentId>>();
  rec.created_at_iteration = j.at("created_at_iteration").get<std::int64_t>();
  rec.eval_count = j.at("eval_count").get<std::int64_t>();
  return rec;
}

}  // namespace escher
