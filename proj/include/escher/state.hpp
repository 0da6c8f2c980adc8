#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "escher/budget.hpp"
#include "escher/population.hpp"
#include "escher/rating.hpp"
#include "escher/rng.hpp"

namespace escher {

struct BestSoFar {
  bool present = false;
  AgentId agent_id = 0;
  std::string payload;
  double s_raw = 0.0;
  double s_norm = 0.0;
  std::int64_t iteration = 0;

  nlohmann::json to_json() const {
    if (!present) return nullptr;
    return nlohmann::json{{"agent_id", agent_id},
                          {"payload", payload},
                          {"s_raw", s_raw},
                          {"s_norm", s_norm},
                          {"iteration", iteration}};
  }

  static BestSoFar from_json(const nlohmann::json& j) {
    BestSoFar b;
    if (j.is_null()) return b;
    b.present = true;
    b.agent_id = j.at("agent_id").get<AgentId>();
    b.payload = j.at("payload").get<std::string>();
    b.s_raw = j.at("s_raw").get<double>();
    b.s_norm = j.at("s_norm").get<double>();
    b.iteration = j.at("iteration").get<std::int64_t>();
    return b;
  }
};

// Everything the loop needs to continue: the unit of checkpointing. A saved
// then reloaded state reproduces the next iteration bit-identically under the
// same configuration.
struct RunState {
  std::int64_t iteration = 0;
  AgentId next_id = 1;
  Population task_pop;
  Population opt_pop;
  EloLedger ledger;
  BudgetLedger budget;
  Rng rng;
  std::string config_digest;
  BestSoFar best;

  AgentId allocate_id() { return next_id++; }
};

namespace detail {

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error("corrupt JSON in " + path.string());
  return j;
}

}  // namespace detail

// Checkpoint directory layout: task_pop.json, opt_pop.json, ledger.json,
// budget.json, rng.json, manifest.json. The directory is staged under a
// temporary name and renamed into place.
inline std::filesystem::path save_checkpoint(const RunState& state,
                                             const std::filesystem::path& run_dir) {
  const std::string name = "ckpt_" + std::to_string(state.iteration);
  const std::filesystem::path final_dir = run_dir / name;
  const std::filesystem::path stage = run_dir / (name + ".staging");
  std::filesystem::remove_all(stage);
  std::filesystem::create_directories(stage);

  detail::write_text_atomic(stage / "task_pop.json", state.task_pop.to_json().dump(2));
  detail::write_text_atomic(stage / "opt_pop.json", state.opt_pop.to_json().dump(2));
  detail::write_text_atomic(stage / "ledger.json", state.ledger.to_json().dump(2));
  detail::write_text_atomic(stage / "budget.json", state.budget.to_json().dump(2));
  detail::write_text_atomic(stage / "rng.json",
                            nlohmann::json{{"engine", rng_to_string(state.rng)}}.dump());
  detail::write_text_atomic(stage / "manifest.json",
                            nlohmann::json{{"iteration", state.iteration},
                                           {"next_id", state.next_id},
                                           {"config_digest", state.config_digest},
                                           {"best_so_far", state.best.to_json()}}
                                .dump(2));

  std::filesystem::remove_all(final_dir);
  std::filesystem::rename(stage, final_dir);
  return final_dir;
}

inline RunState load_checkpoint(const std::filesystem::path& dir,
                                MapElitesConfig opt_grid = {}) {
  RunState state;
  const nlohmann::json manifest = detail::read_json_file(dir / "manifest.json");
  state.iteration = manifest.at("iteration").get<std::int64_t>();
  state.next_id = manifest.at("next_id").get<AgentId>();
  state.config_digest = manifest.at("config_digest").get<std::string>();
  state.best = BestSoFar::from_json(manifest.at("best_so_far"));
  state.task_pop = Population::from_json(detail::read_json_file(dir / "task_pop.json"));
  state.opt_pop = Population::from_json(detail::read_json_file(dir / "opt_pop.json"), opt_grid);
  state.ledger = EloLedger::from_json(detail::read_json_file(dir / "ledger.json"));
  state.budget = BudgetLedger::from_json(detail::read_json_file(dir / "budget.json"));
  state.rng = rng_from_string(detail::read_json_file(dir / "rng.json").at("engine").get<std::string>());
  return state;
}

}  // namespace escher
