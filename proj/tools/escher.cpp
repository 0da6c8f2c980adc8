// Operator-facing entry point: configure, launch, resume, evaluate and report
// on closed-loop evolution runs.
//
// Exit codes: 0 success / valid input, 1 invalid input, 2 configuration
// error, 3 backend error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "escher/config.hpp"
#include "escher/engine.hpp"
#include "escher/remote_backend.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitBackendError = 3;

struct Overrides {
  std::optional<std::string> task;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget;
  std::optional<std::string> backend_mode;
  std::optional<std::string> out_dir;
  std::optional<std::int64_t> max_iterations;

  void apply(escher::RunConfig& cfg) const {
    if (task) cfg.task = escher::task_from_string(*task);
    if (seed) {
      cfg.seed = *seed;
      cfg.seed_entropy = false;
    }
    if (budget) cfg.budget_eq = *budget;
    if (backend_mode) {
      if (*backend_mode == "scripted") cfg.backend.mode = escher::BackendMode::Scripted;
      else if (*backend_mode == "remote") cfg.backend.mode = escher::BackendMode::RemoteChat;
      else throw escher::ConfigError("--backend must be scripted or remote");
    }
    if (out_dir) cfg.out_dir = *out_dir;
    if (max_iterations) cfg.loop.max_iterations = *max_iterations;
  }
};

void resolve_entropy_seed(escher::RunConfig& cfg) {
  if (!cfg.seed_entropy) return;
  std::random_device rd;
  cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  cfg.seed_entropy = false;
}

int check_backend_credentials(const escher::RunConfig& cfg) {
  if (cfg.backend.mode != escher::BackendMode::RemoteChat) return kExitOk;
  for (const auto& profile : cfg.backend.routing) {
    const char* key = std::getenv(profile.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      std::cerr << "backend error: profile \"" << profile.name << "\" needs "
                << profile.api_key_env << " in the environment\n";
      return kExitBackendError;
    }
  }
  return kExitOk;
}

std::vector<std::string> resolve_task_seeds(const escher::RunConfig& cfg) {
  if (!cfg.task_seed_files.empty()) return escher::load_seed_payloads(cfg.task_seed_files);
  return {escher::default_task_payload(cfg.task)};
}

std::vector<std::string> resolve_optimizer_seeds(const escher::RunConfig& cfg) {
  if (!cfg.optimizer_seed_files.empty())
    return escher::load_seed_payloads(cfg.optimizer_seed_files);
  return escher::default_optimizer_payloads();
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  std::ofstream out(tmp);
  out << text;
  out.close();
  fs::rename(tmp, path);
}

int execute_run(escher::RunConfig cfg, escher::RunState state, const fs::path& out_dir) {
  escher::TaskEvaluator evaluator(cfg.task_spec(), cfg.exec_config());
  std::unique_ptr<escher::GenerationBackend> backend = escher::make_backend(cfg.backend);
  escher::RunLog log(out_dir / "run.jsonl");

  escher::Engine engine(std::move(state), cfg.loop, cfg.backend, evaluator, *backend, &log,
                        out_dir);
  engine.run();
  write_file_atomic(out_dir / "summary.json", engine.summary_json(cfg.task).dump(2) + "\n");
  std::cout << (out_dir / "summary.json").string() << "\n";
  return kExitOk;
}

int cmd_run(const std::string& config_path, const Overrides& overrides) {
  escher::RunConfig cfg =
      config_path.empty() ? escher::RunConfig{} : escher::load_run_config(config_path);
  overrides.apply(cfg);
  resolve_entropy_seed(cfg);

  if (const int rc = check_backend_credentials(cfg); rc != kExitOk) return rc;

  const fs::path out_dir = cfg.out_dir;
  fs::create_directories(out_dir);
  const std::string digest = cfg.digest();
  write_file_atomic(out_dir / "config.json", cfg.to_json().dump(2) + "\n");

  escher::TaskEvaluator seed_evaluator(cfg.task_spec(), cfg.exec_config());
  escher::RunState state = escher::initialize_run_state(
      resolve_task_seeds(cfg), resolve_optimizer_seeds(cfg), cfg.task_capacity,
      cfg.optimizer_capacity, cfg.map_elites, cfg.budget_eq, cfg.seed, digest, seed_evaluator);
  return execute_run(std::move(cfg), std::move(state), out_dir);
}

std::vector<fs::path> list_checkpoints(const fs::path& run_dir) {
  std::vector<fs::path> found;
  if (!fs::is_directory(run_dir)) return found;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("ckpt_", 0) == 0 &&
        fs::exists(entry.path() / "manifest.json"))
      found.push_back(entry.path());
  }
  std::sort(found.begin(), found.end(), [](const fs::path& a, const fs::path& b) {
    return std::stoll(a.filename().string().substr(5)) <
           std::stoll(b.filename().string().substr(5));
  });
  return found;
}

// `latest` takes the newest checkpoint; `best` draws one by rank-softmax over
// the checkpoints' best scores (checkpoint-selection temperature).
fs::path pick_checkpoint(const std::vector<fs::path>& ckpts, const std::string& pick,
                         double temperature, std::uint64_t seed) {
  if (pick == "latest") return ckpts.back();
  std::vector<double> scores;
  for (const auto& dir : ckpts) {
    const auto manifest = escher::detail::read_json_file(dir / "manifest.json");
    const auto& best = manifest.at("best_so_far");
    scores.push_back(best.is_null() ? 0.0 : best.at("s_norm").get<double>());
  }
  escher::Rng rng(seed);
  const auto probs = escher::rank_softmax_probs(scores, temperature);
  return ckpts[escher::draw_categorical(probs, rng)];
}

int cmd_resume(const std::string& path_text, const std::string& config_path,
               const std::string& pick, const std::string& out_override, std::uint64_t pick_seed) {
  const fs::path path(path_text);
  fs::path ckpt_dir;
  fs::path run_dir;
  if (fs::exists(path / "manifest.json")) {
    ckpt_dir = path;
    run_dir = path.parent_path();
  } else {
    const auto ckpts = list_checkpoints(path);
    if (ckpts.empty()) {
      std::cerr << "no checkpoints under " << path << "\n";
      return kExitInvalidInput;
    }
    run_dir = path;
    // checkpoint-selection temperature comes from the config when available
    double temperature = escher::default_temperature(escher::SamplerRole::Checkpoint);
    const fs::path stored =
        !config_path.empty() ? fs::path(config_path) : run_dir / "config.json";
    try {
      std::ifstream in(stored);
      nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
      if (!j.is_discarded()) temperature = escher::run_config_from_json(j).loop.checkpoint_temp;
    } catch (...) {
    }
    ckpt_dir = pick_checkpoint(ckpts, pick, temperature, pick_seed);
  }

  const fs::path config_file =
      !config_path.empty() ? fs::path(config_path) : run_dir / "config.json";
  std::ifstream in(config_file);
  if (!in) {
    std::cerr << "cannot open config " << config_file << "\n";
    return kExitConfigError;
  }
  nlohmann::json config_json = nlohmann::json::parse(in, nullptr, false);
  escher::RunConfig cfg;
  if (!config_json.is_discarded()) {
    cfg = escher::run_config_from_json(config_json);
  } else {
    cfg = escher::load_run_config(config_file);  // a TOML file works here too
  }

  if (const int rc = check_backend_credentials(cfg); rc != kExitOk) return rc;

  escher::RunState state = escher::load_checkpoint(ckpt_dir, cfg.map_elites);
  if (state.config_digest != cfg.digest()) {
    std::cerr << "config digest mismatch: checkpoint " << state.config_digest << " vs config "
              << cfg.digest() << "\n";
    return kExitConfigError;
  }

  const fs::path out_dir = out_override.empty() ? run_dir : fs::path(out_override);
  fs::create_directories(out_dir);
  if (!fs::exists(out_dir / "config.json"))
    write_file_atomic(out_dir / "config.json", cfg.to_json().dump(2) + "\n");
  return execute_run(std::move(cfg), std::move(state), out_dir);
}

int cmd_eval(const std::string& input_path, const std::string& task_text, double timeout_s,
             long memory_mb) {
  std::ifstream in(input_path);
  if (!in) {
    std::cerr << "cannot open " << input_path << "\n";
    return kExitInvalidInput;
  }
  std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  escher::TaskDomain task;
  if (!task_text.empty()) {
    task = escher::task_from_string(task_text);
  } else {
    try {
      task = escher::parse_construction(payload).task();
    } catch (const escher::Error&) {
      std::cerr << "cannot infer the task from a program payload; pass --task\n";
      return kExitConfigError;
    }
  }

  escher::TaskSpec spec = escher::TaskSpec::defaults(task);
  spec.exec_timeout_s = timeout_s;
  escher::AgentExecConfig exec;
  exec.limits.timeout_s = timeout_s;
  exec.limits.memory_mb = memory_mb;
  escher::TaskEvaluator evaluator(spec, exec);
  const escher::EvalResult result = evaluator.evaluate_payload(payload);
  std::cout << result.to_json().dump(2) << "\n";
  return result.valid ? kExitOk : kExitInvalidInput;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int cmd_report(const std::string& run_path, const std::string& kind, const std::string& out_path) {
  fs::path log_path(run_path);
  if (fs::is_directory(log_path)) log_path /= "run.jsonl";
  std::ifstream in(log_path);
  if (!in) {
    std::cerr << "cannot open log " << log_path << "\n";
    return kExitInvalidInput;
  }

  std::ostringstream csv;
  std::string line;
  if (kind == "best_so_far") {
    csv << "equivalent_tokens,best_norm_score\n";
    double cum_eq = 0.0;
    double best = 0.0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json event = nlohmann::json::parse(line, nullptr, false);
      if (event.is_discarded()) {
        std::cerr << "corrupt log line\n";
        return kExitInvalidInput;
      }
      const std::string type = event.value("event", "");
      if (type == "gen" || type == "meta") {
        cum_eq += event.value("tokens_out", 0.0) + 0.25 * event.value("tokens_in", 0.0);
      } else if (type == "eval") {
        best = std::max(best, event.value("s_norm", 0.0));
        csv << format_double(cum_eq) << "," << format_double(best) << "\n";
      }
    }
  } else if (kind == "elo") {
    csv << "iteration,optimizer_id,rating\n";
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json event = nlohmann::json::parse(line, nullptr, false);
      if (event.is_discarded()) {
        std::cerr << "corrupt log line\n";
        return kExitInvalidInput;
      }
      if (event.value("event", "") != "elo") continue;
      csv << event.at("iter").get<std::int64_t>() << "," << event.at("id").get<std::uint64_t>()
          << "," << format_double(event.at("new").get<double>()) << "\n";
    }
  } else {
    std::cerr << "unknown report kind: " << kind << "\n";
    return kExitConfigError;
  }

  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(out_path);
    out << csv.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed-loop co-evolution of task and optimizer agents"};
  app.require_subcommand(1);

  std::string config_path, task_text, backend_mode, out_dir;
  std::uint64_t seed = 0;
  double budget = 0.0;
  std::int64_t max_iterations = 0;
  bool seed_set = false, budget_set = false, max_iter_set = false;

  auto* run = app.add_subcommand("run", "launch a run from a config file");
  run->add_option("--config", config_path, "TOML run configuration");
  run->add_option("--task", task_text, "kn|cp|ht");
  run->add_option("--seed", seed)->each([&](const std::string&) { seed_set = true; });
  run->add_option("--budget", budget, "equivalent-token budget")
      ->each([&](const std::string&) { budget_set = true; });
  run->add_option("--backend", backend_mode, "scripted|remote");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--max-iterations", max_iterations)
      ->each([&](const std::string&) { max_iter_set = true; });

  std::string resume_path, resume_pick = "latest", resume_out;
  std::uint64_t pick_seed = 0;
  auto* resume = app.add_subcommand("resume", "continue from a checkpoint");
  resume->add_option("path", resume_path, "checkpoint or run directory")->required();
  resume->add_option("--config", config_path, "config file (defaults to the stored one)");
  resume->add_option("--pick", resume_pick, "latest|best")
      ->check(CLI::IsMember({"latest", "best"}));
  resume->add_option("--out", resume_out, "output directory (defaults to the run directory)");
  resume->add_option("--pick-seed", pick_seed, "seed for --pick best");

  std::string eval_input, eval_task;
  double eval_timeout = 120.0;
  long eval_memory = 512;
  auto* eval = app.add_subcommand("eval", "evaluate a construction or program file");
  eval->add_option("input", eval_input, "construction document or program")->required();
  eval->add_option("--task", eval_task, "kn|cp|ht (inferred for literal documents)");
  eval->add_option("--timeout", eval_timeout, "program timeout in seconds");
  eval->add_option("--memory-mb", eval_memory, "program memory cap");

  std::string report_path, report_kind, report_out;
  auto* report = app.add_subcommand("report", "emit plot-ready CSV from a run log");
  report->add_option("run_dir", report_path, "run directory or log file")->required();
  report->add_option("--kind", report_kind, "best_so_far|elo")->required();
  report->add_option("--out", report_out, "output CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  try {
    Overrides overrides;
    if (!task_text.empty()) overrides.task = task_text;
    if (seed_set) overrides.seed = seed;
    if (budget_set) overrides.budget = budget;
    if (!backend_mode.empty()) overrides.backend_mode = backend_mode;
    if (!out_dir.empty()) overrides.out_dir = out_dir;
    if (max_iter_set) overrides.max_iterations = max_iterations;

    if (app.got_subcommand(run)) return cmd_run(config_path, overrides);
    if (app.got_subcommand(resume))
      return cmd_resume(resume_path, config_path, resume_pick, resume_out, pick_seed);
    if (app.got_subcommand(eval)) return cmd_eval(eval_input, eval_task, eval_timeout, eval_memory);
    if (app.got_subcommand(report)) return cmd_report(report_path, report_kind, report_out);
  } catch (const escher::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const escher::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidInput;
  }
  return kExitConfigError;
}
