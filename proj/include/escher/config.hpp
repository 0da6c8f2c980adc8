#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "escher/engine.hpp"
#include "escher/toml_lite.hpp"

namespace escher {

struct ConfigError : Error {
  using Error::Error;
};

// Aggregated run configuration. Every CLI flag has a file equivalent here;
// flags override file values.
struct RunConfig {
  TaskDomain task = TaskDomain::CP;
  std::filesystem::path out_dir = "runs/out";
  std::uint64_t seed = 0;
  bool seed_entropy = false;

  double budget_eq = 10'000'000.0;
  std::size_t task_capacity = 200;
  std::size_t optimizer_capacity = 50;
  MapElitesConfig map_elites;
  LoopConfig loop;

  double eval_timeout_s = 120.0;
  long memory_mb = 512;
  double tolerance = 1e-9;
  std::vector<std::string> interpreter = {"python3"};

  BackendConfig backend;

  std::vector<std::string> task_seed_files;
  std::vector<std::string> optimizer_seed_files;

  // Canonical document form: the same shape the TOML file parses into, so a
  // stored resolved config can be loaded back with run_config_from_json.
  nlohmann::json to_json() const {
    nlohmann::json profiles = nlohmann::json::array();
    for (const auto& p : backend.routing) {
      nlohmann::json prof{{"name", p.name},       {"base_url", p.base_url},
                          {"path", p.path},       {"model", p.model},
                          {"weight", p.weight},   {"api_key_env", p.api_key_env}};
      for (auto it = p.extra.begin(); it != p.extra.end(); ++it) prof[it.key()] = *it;
      profiles.push_back(std::move(prof));
    }
    nlohmann::json run{{"task", to_string(task)},
                       {"out_dir", out_dir.string()},
                       {"max_iterations", loop.max_iterations}};
    if (seed_entropy) run["seed"] = "entropy";
    else run["seed"] = seed;
    return nlohmann::json{
        {"run", std::move(run)},
        {"budget", {{"equivalent_tokens", budget_eq}}},
        {"populations",
         {{"task_capacity", task_capacity}, {"optimizer_capacity", optimizer_capacity}}},
        {"map_elites",
         {{"enabled", map_elites.enabled},
          {"payload_buckets", map_elites.payload_buckets},
          {"eval_buckets", map_elites.eval_buckets},
          {"payload_bucket_width", map_elites.payload_bucket_width},
          {"eval_bucket_width", map_elites.eval_bucket_width}}},
        {"loop",
         {{"cohort_size", loop.cohort_size},
          {"task_parents", loop.task_parent_count},
          {"meta_subset", loop.meta_subset},
          {"meta_every", loop.meta_every},
          {"draw_tol", loop.draw_tol},
          {"checkpoint_every", loop.checkpoint_every}}},
        {"sampling",
         {{"matchmaking", loop.matchmaking_temp},
          {"mentoring", loop.mentoring_temp},
          {"checkpoint", loop.checkpoint_temp},
          {"task_parent", loop.task_parent_temp}}},
        {"eval",
         {{"timeout_s", eval_timeout_s},
          {"memory_mb", memory_mb},
          {"tolerance", tolerance},
          {"workers", loop.eval_workers},
          {"interpreter", interpreter}}},
        {"backend",
         {{"mode", backend.mode == BackendMode::Scripted ? "scripted" : "remote"},
          {"task_temperature", backend.task_temperature},
          {"optimizer_temperature", backend.optimizer_temperature},
          {"task_timeout_s", backend.task_timeout_s},
          {"optimizer_timeout_s", backend.optimizer_timeout_s},
          {"retries", backend.retries},
          {"max_output_tokens", backend.max_output_tokens},
          {"profiles", std::move(profiles)}}},
        {"seeds", {{"tasks", task_seed_files}, {"optimizers", optimizer_seed_files}}}};
  }

  // FNV-1a over the canonical JSON form; pins checkpoints to their config.
  // The output directory is excluded: relocating a run does not change it.
  std::string digest() const {
    nlohmann::json doc = to_json();
    doc.at("run").erase("out_dir");
    const std::string text = doc.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  }

  TaskSpec task_spec() const {
    TaskSpec spec = TaskSpec::defaults(task);
    spec.exec_timeout_s = eval_timeout_s;
    spec.tolerance = tolerance;
    return spec;
  }

  AgentExecConfig exec_config() const {
    AgentExecConfig exec;
    exec.limits.timeout_s = eval_timeout_s;
    exec.limits.memory_mb = memory_mb;
    exec.interpreter = interpreter;
    return exec;
  }
};

namespace detail {

template <typename T>
void read_field(const nlohmann::json& table, const char* key, T& out) {
  if (table.contains(key)) out = table.at(key).get<T>();
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& doc) {
  RunConfig cfg;
  try {
    if (doc.contains("run")) {
      const auto& run = doc.at("run");
      if (run.contains("task")) cfg.task = task_from_string(run.at("task").get<std::string>());
      if (run.contains("out_dir")) cfg.out_dir = run.at("out_dir").get<std::string>();
      if (run.contains("seed")) {
        const auto& seed = run.at("seed");
        if (seed.is_string()) {
          if (seed.get<std::string>() != "entropy")
            throw ConfigError("run.seed must be an integer or \"entropy\"");
          cfg.seed_entropy = true;
        } else {
          cfg.seed = seed.get<std::uint64_t>();
        }
      }
      detail::read_field(run, "max_iterations", cfg.loop.max_iterations);
    }
    if (doc.contains("budget"))
      detail::read_field(doc.at("budget"), "equivalent_tokens", cfg.budget_eq);
    if (doc.contains("populations")) {
      detail::read_field(doc.at("populations"), "task_capacity", cfg.task_capacity);
      detail::read_field(doc.at("populations"), "optimizer_capacity", cfg.optimizer_capacity);
    }
    if (doc.contains("map_elites")) {
      const auto& me = doc.at("map_elites");
      detail::read_field(me, "enabled", cfg.map_elites.enabled);
      detail::read_field(me, "payload_buckets", cfg.map_elites.payload_buckets);
      detail::read_field(me, "eval_buckets", cfg.map_elites.eval_buckets);
      detail::read_field(me, "payload_bucket_width", cfg.map_elites.payload_bucket_width);
      detail::read_field(me, "eval_bucket_width", cfg.map_elites.eval_bucket_width);
    }
    if (doc.contains("loop")) {
      const auto& loop = doc.at("loop");
      detail::read_field(loop, "cohort_size", cfg.loop.cohort_size);
      detail::read_field(loop, "task_parents", cfg.loop.task_parent_count);
      detail::read_field(loop, "meta_subset", cfg.loop.meta_subset);
      detail::read_field(loop, "meta_every", cfg.loop.meta_every);
      detail::read_field(loop, "checkpoint_every", cfg.loop.checkpoint_every);
      detail::read_field(loop, "draw_tol", cfg.loop.draw_tol);
    }
    if (doc.contains("sampling")) {
      const auto& s = doc.at("sampling");
      detail::read_field(s, "matchmaking", cfg.loop.matchmaking_temp);
      detail::read_field(s, "mentoring", cfg.loop.mentoring_temp);
      detail::read_field(s, "checkpoint", cfg.loop.checkpoint_temp);
      detail::read_field(s, "task_parent", cfg.loop.task_parent_temp);
    }
    if (doc.contains("eval")) {
      const auto& ev = doc.at("eval");
      detail::read_field(ev, "timeout_s", cfg.eval_timeout_s);
      detail::read_field(ev, "memory_mb", cfg.memory_mb);
      detail::read_field(ev, "tolerance", cfg.tolerance);
      detail::read_field(ev, "workers", cfg.loop.eval_workers);
      detail::read_field(ev, "interpreter", cfg.interpreter);
    }
    if (doc.contains("backend")) {
      const auto& be = doc.at("backend");
      if (be.contains("mode")) {
        const std::string mode = be.at("mode").get<std::string>();
        if (mode == "scripted") cfg.backend.mode = BackendMode::Scripted;
        else if (mode == "remote") cfg.backend.mode = BackendMode::RemoteChat;
        else throw ConfigError("backend.mode must be \"scripted\" or \"remote\"");
      }
      detail::read_field(be, "task_temperature", cfg.backend.task_temperature);
      detail::read_field(be, "optimizer_temperature", cfg.backend.optimizer_temperature);
      detail::read_field(be, "task_timeout_s", cfg.backend.task_timeout_s);
      detail::read_field(be, "optimizer_timeout_s", cfg.backend.optimizer_timeout_s);
      detail::read_field(be, "retries", cfg.backend.retries);
      detail::read_field(be, "max_output_tokens", cfg.backend.max_output_tokens);
      if (be.contains("profiles")) {
        for (const auto& item : be.at("profiles")) {
          EndpointProfile p;
          detail::read_field(item, "name", p.name);
          detail::read_field(item, "base_url", p.base_url);
          detail::read_field(item, "path", p.path);
          detail::read_field(item, "model", p.model);
          detail::read_field(item, "weight", p.weight);
          detail::read_field(item, "api_key_env", p.api_key_env);
          for (auto it = item.begin(); it != item.end(); ++it) {
            const std::string& key = it.key();
            if (key != "name" && key != "base_url" && key != "path" && key != "model" &&
                key != "weight" && key != "api_key_env")
              p.extra[key] = *it;
          }
          cfg.backend.routing.push_back(std::move(p));
        }
      }
    }
    if (doc.contains("seeds")) {
      detail::read_field(doc.at("seeds"), "tasks", cfg.task_seed_files);
      detail::read_field(doc.at("seeds"), "optimizers", cfg.optimizer_seed_files);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (!(cfg.budget_eq > 0.0)) throw ConfigError("budget.equivalent_tokens must be positive");
  cfg.loop.validate();
  cfg.backend.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return run_config_from_json(toml_lite::parse(text));
  } catch (const TomlError& e) {
    throw ConfigError(e.what());
  }
}

// Seed payload files are JSON arrays of payload strings.
inline std::vector<std::string> load_seed_payloads(const std::vector<std::string>& files) {
  std::vector<std::string> payloads;
  for (const std::string& file : files) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open seed file: " + file);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("seed file is not valid JSON: " + file);
    if (j.is_object()) {
      payloads.push_back(j.dump());  // a single literal construction document
      continue;
    }
    if (!j.is_array()) throw ConfigError("seed file must be a JSON array or object: " + file);
    for (const auto& item : j) {
      if (item.is_string()) payloads.push_back(item.get<std::string>());
      else payloads.push_back(item.dump());
    }
  }
  return payloads;
}

}  // namespace escher
