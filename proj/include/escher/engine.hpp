#pragma once

#include <algorithm>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "escher/generation.hpp"
#include "escher/logging.hpp"
#include "escher/sampling.hpp"
#include "escher/scripted_backend.hpp"
#include "escher/state.hpp"
#include "escher/task_runner.hpp"

namespace escher {

struct LoopConfig {
  int cohort_size = 4;        // |I|, benchmarking cohort
  int task_parent_count = 3;  // |J|, shared parent set per round
  int meta_subset = 3;        // |I^|, inputs of the self-referential step
  int meta_every = 1;         // iterations between self-referential steps; 0 disables
  double draw_tol = kDefaultDrawTol;
  double matchmaking_temp = 1.2;
  double mentoring_temp = 0.5;
  double checkpoint_temp = 1.2;
  double task_parent_temp = 1.2;
  int checkpoint_every = 20;  // 0 disables
  std::int64_t max_iterations = 1'000'000;
  int eval_workers = 1;

  void validate() const {
    if (cohort_size < 2) throw Error("loop: cohort_size must be >= 2");
    if (task_parent_count < 1) throw Error("loop: task_parent_count must be >= 1");
    if (meta_subset < 1) throw Error("loop: meta_subset must be >= 1");
    if (eval_workers < 1) throw Error("loop: eval_workers must be >= 1");
  }
};

// Orchestrates one closed-loop evolution run: rank-based sampling, task
// generation and evaluation, dynamic benchmarking of the optimizers via Elo,
// the self-referential optimizer step, budget accounting and checkpointing.
class Engine {
 public:
  Engine(RunState state, LoopConfig cfg, const BackendConfig& backend_cfg,
         TaskEvaluator& evaluator, GenerationBackend& backend, RunLog* log,
         std::filesystem::path run_dir)
      : state_(std::move(state)),
        cfg_(cfg),
        backend_cfg_(backend_cfg),
        evaluator_(evaluator),
        backend_(backend),
        log_(log),
        run_dir_(std::move(run_dir)) {
    cfg_.validate();
  }

  const RunState& state() const { return state_; }
  RunState take_state() { return std::move(state_); }

  bool budget_exhausted() const { return state_.budget.exhausted(); }

  // One full pass of the loop body. Returns false when the run cannot
  // continue (a population is empty).
  bool run_iteration() {
    if (state_.task_pop.empty() || state_.opt_pop.empty()) return false;
    const std::int64_t iter = state_.iteration + 1;
    std::int64_t round_in = 0, round_out = 0;

    // (1) sample the benchmarking cohort and the shared parent set
    const std::size_t cohort_k =
        std::min<std::size_t>(cfg_.cohort_size, state_.opt_pop.size());
    const std::vector<AgentRecord> cohort = sample_subset(
        state_.opt_pop, cohort_k, SamplerConfig{SamplerRole::Matchmaking, cfg_.matchmaking_temp},
        state_.rng);
    const std::size_t parent_k =
        std::min<std::size_t>(cfg_.task_parent_count, state_.task_pop.size());
    const std::vector<AgentRecord> parents = sample_subset(
        state_.task_pop, parent_k, SamplerConfig{SamplerRole::TaskParent, cfg_.task_parent_temp},
        state_.rng);

    std::vector<std::pair<std::string, double>> parent_payloads;
    std::vector<AgentId> parent_ids;
    for (const auto& p : parents) {
      parent_payloads.emplace_back(p.payload, p.score);
      parent_ids.push_back(p.id);
    }

    // (2) every cohort member transforms the same parents; generation draws
    // stay on the orchestration thread so the RNG stream is reproducible,
    // evaluation may fan out.
    struct Slot {
      GenerationResult gen;
      std::optional<AgentId> agent_id;
      EvalResult eval;
    };
    std::vector<Slot> slots(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      GenerationRequest req;
      req.operator_agent = cohort[i];
      req.parents = parent_payloads;
      req.target_kind = AgentKind::Task;
      req.temperature = backend_cfg_.task_temperature;
      req.timeout_s = backend_cfg_.task_timeout_s;
      req.retries = backend_cfg_.retries;
      req.max_output_tokens = backend_cfg_.max_output_tokens;
      slots[i].gen = backend_.generate(req, state_.rng);
      round_in += slots[i].gen.tokens_in;
      round_out += slots[i].gen.tokens_out;
    }

    auto eval_slot = [&](Slot& slot) {
      if (slot.gen.ok) slot.eval = evaluator_.evaluate_payload(slot.gen.payload);
    };
    if (cfg_.eval_workers > 1) {
      std::vector<std::future<void>> jobs;
      for (auto& slot : slots)
        jobs.push_back(std::async(std::launch::async, eval_slot, std::ref(slot)));
      for (auto& job : jobs) job.get();
    } else {
      for (auto& slot : slots) eval_slot(slot);
    }

    std::vector<double> round_scores(slots.size(), 0.0);
    struct BestEvent {
      double score;
      AgentId agent;
    };
    std::vector<BestEvent> best_events;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      Slot& slot = slots[i];
      if (log_ != nullptr) {
        nlohmann::json gen_event{{"event", "gen"},         {"iter", iter},
                                 {"slot", static_cast<int>(i)}, {"operator", cohort[i].id},
                                 {"target", "task"},       {"ok", slot.gen.ok},
                                 {"tokens_in", slot.gen.tokens_in},
                                 {"tokens_out", slot.gen.tokens_out},
                                 {"backend", slot.gen.backend_label}};
        if (!slot.gen.ok) gen_event["error"] = slot.gen.error;
        log_->write(gen_event);
      }
      if (!slot.gen.ok) continue;  // failed slot competes with score 0

      AgentRecord rec;
      rec.id = state_.allocate_id();
      rec.kind = AgentKind::Task;
      rec.payload = slot.gen.payload;
      rec.score = slot.eval.valid ? slot.eval.s_norm : 0.0;
      rec.parent_ids = parent_ids;
      rec.created_at_iteration = iter;
      slot.agent_id = rec.id;
      round_scores[i] = rec.score;

      if (log_ != nullptr) {
        nlohmann::json eval_event{{"event", "eval"},   {"iter", iter},
                                  {"agent", rec.id},   {"operator", cohort[i].id},
                                  {"valid", slot.eval.valid}, {"s_raw", slot.eval.s_raw},
                                  {"s_norm", slot.eval.s_norm}};
        if (slot.eval.violation) eval_event["violation"] = *slot.eval.violation;
        log_->write(eval_event);
      }
      if (slot.eval.valid &&
          (!state_.best.present || slot.eval.s_norm > state_.best.s_norm)) {
        state_.best.present = true;
        state_.best.agent_id = rec.id;
        state_.best.payload = rec.payload;
        state_.best.s_raw = slot.eval.s_raw;
        state_.best.s_norm = slot.eval.s_norm;
        state_.best.iteration = iter;
        best_events.push_back(BestEvent{slot.eval.s_norm, rec.id});
      }
      state_.task_pop.insert(std::move(rec));
    }

    // (3) dynamic benchmarking: the round's task scores become pairwise
    // win/loss signals; no additional evaluations happen here.
    const bool any_ok =
        std::any_of(slots.begin(), slots.end(), [](const Slot& s) { return s.gen.ok; });
    if (cohort.size() >= 2 && any_ok) {
      ResultMatrix result = pairwise_competition(round_scores, cfg_.draw_tol);
      for (const auto& member : cohort) result.cohort.push_back(member.id);
      const auto round = state_.ledger.apply(result, iter);
      for (const auto& entry : round) {
        if (AgentRecord* rec = state_.opt_pop.find_mutable(entry.id)) {
          rec->score = entry.new_rating;
          rec->eval_count += 1;
        }
        if (log_ != nullptr)
          log_->write(nlohmann::json{{"event", "elo"},
                                     {"iter", iter},
                                     {"id", entry.id},
                                     {"old", entry.old_rating},
                                     {"new", entry.new_rating}});
      }
    } else if (log_ != nullptr) {
      log_->write(nlohmann::json{{"event", "void_round"}, {"iter", iter}});
    }

    // (4) self-referential step: a lead optimizer rewrites a subset of the
    // optimizer population into a new candidate.
    if (cfg_.meta_every > 0 && iter % cfg_.meta_every == 0 && !state_.opt_pop.empty()) {
      const std::size_t draw_k =
          std::min<std::size_t>(1 + cfg_.meta_subset, state_.opt_pop.size());
      const std::vector<AgentRecord> draws = sample_subset(
          state_.opt_pop, draw_k, SamplerConfig{SamplerRole::Mentoring, cfg_.mentoring_temp},
          state_.rng);
      const AgentRecord& lead = draws[0];
      std::vector<AgentRecord> inputs(draws.begin() + (draws.size() > 1 ? 1 : 0), draws.end());

      GenerationRequest req;
      req.operator_agent = lead;
      req.target_kind = AgentKind::Optimizer;
      req.temperature = backend_cfg_.optimizer_temperature;
      req.timeout_s = backend_cfg_.optimizer_timeout_s;
      req.retries = backend_cfg_.retries;
      req.max_output_tokens = backend_cfg_.max_output_tokens;
      std::vector<double> input_ratings;
      for (const auto& in : inputs) {
        req.parents.emplace_back(in.payload, in.score);
        input_ratings.push_back(in.score);
      }
      GenerationResult gen = backend_.generate(req, state_.rng);
      round_in += gen.tokens_in;
      round_out += gen.tokens_out;

      nlohmann::json meta_event{{"event", "meta"},
                                {"iter", iter},
                                {"lead", lead.id},
                                {"ok", gen.ok},
                                {"tokens_in", gen.tokens_in},
                                {"tokens_out", gen.tokens_out}};
      if (gen.ok) {
        AgentRecord rec;
        rec.id = state_.allocate_id();
        rec.kind = AgentKind::Optimizer;
        rec.payload = gen.payload;
        rec.score = initialize_offspring_rating(input_ratings);
        for (const auto& in : inputs) rec.parent_ids.push_back(in.id);
        rec.created_at_iteration = iter;
        meta_event["agent"] = rec.id;
        meta_event["rating"] = rec.score;
        const double rating = rec.score;
        const AgentId rec_id = rec.id;
        const InsertOutcome outcome = state_.opt_pop.insert(std::move(rec));
        meta_event["inserted"] = outcome.inserted;
        if (outcome.inserted) state_.ledger.add(rec_id, rating);
        if (outcome.evicted) {
          state_.ledger.erase(*outcome.evicted);
          meta_event["evicted"] = *outcome.evicted;
        }
      } else {
        meta_event["error"] = gen.error;
      }
      if (log_ != nullptr) log_->write(meta_event);
    }

    // (5) budget accounting, (6) best-so-far events, (7) checkpoint
    state_.budget.charge(round_in, round_out);
    state_.iteration = iter;
    if (log_ != nullptr) {
      for (const auto& e : best_events)
        log_->write(nlohmann::json{{"event", "best_so_far"},
                                   {"iter", iter},
                                   {"equivalent_tokens", state_.budget.equivalent_tokens()},
                                   {"score", e.score},
                                   {"agent", e.agent}});
    }
    if (cfg_.checkpoint_every > 0 && iter % cfg_.checkpoint_every == 0 && !run_dir_.empty()) {
      save_checkpoint(state_, run_dir_);
      if (log_ != nullptr)
        log_->write(nlohmann::json{{"event", "checkpoint"},
                                   {"iter", iter},
                                   {"dir", "ckpt_" + std::to_string(iter)}});
    }
    return true;
  }

  // Runs until the equivalent-token budget is exhausted or max_iterations is
  // reached. A round that crosses the budget line still completes.
  void run() {
    while (!state_.budget.exhausted() && state_.iteration < cfg_.max_iterations) {
      if (!run_iteration()) break;
    }
  }

  nlohmann::json summary_json(TaskDomain task) const {
    nlohmann::json best = nullptr;
    if (state_.best.present) {
      best = nlohmann::json{{"agent_id", state_.best.agent_id},
                            {"s_raw", state_.best.s_raw},
                            {"s_norm", state_.best.s_norm},
                            {"iteration", state_.best.iteration},
                            {"payload", state_.best.payload}};
    }
    return nlohmann::json{{"task", to_string(task)},
                          {"iterations", state_.iteration},
                          {"equivalent_tokens", state_.budget.equivalent_tokens()},
                          {"tokens_in", state_.budget.tokens_in_total},
                          {"tokens_out", state_.budget.tokens_out_total},
                          {"best", std::move(best)},
                          {"config_digest", state_.config_digest}};
  }

 private:
  RunState state_;
  LoopConfig cfg_;
  BackendConfig backend_cfg_;
  TaskEvaluator& evaluator_;
  GenerationBackend& backend_;
  RunLog* log_;
  std::filesystem::path run_dir_;
};

// Builds the initial state: seed task agents are evaluated immediately, seed
// optimizers enter at the initial Elo rating with no warm-up tournament.
inline RunState initialize_run_state(const std::vector<std::string>& task_seeds,
                                     const std::vector<std::string>& optimizer_seeds,
                                     std::size_t task_capacity, std::size_t opt_capacity,
                                     MapElitesConfig opt_grid, double budget_eq,
                                     std::uint64_t rng_seed, const std::string& config_digest,
                                     TaskEvaluator& evaluator) {
  if (task_seeds.empty()) throw Error("initialize_run_state: no task seeds");
  if (optimizer_seeds.empty()) throw Error("initialize_run_state: no optimizer seeds");

  RunState state;
  state.task_pop = Population(AgentKind::Task, task_capacity);
  state.opt_pop = Population(AgentKind::Optimizer, opt_capacity, opt_grid);
  state.budget.budget_eq = budget_eq;
  state.rng.seed(rng_seed);
  state.config_digest = config_digest;

  for (const std::string& payload : task_seeds) {
    AgentRecord rec;
    rec.id = state.allocate_id();
    rec.kind = AgentKind::Task;
    rec.payload = payload;
    const EvalResult eval = evaluator.evaluate_payload(payload);
    rec.score = eval.valid ? eval.s_norm : 0.0;
    rec.created_at_iteration = 0;
    if (eval.valid && (!state.best.present || eval.s_norm > state.best.s_norm)) {
      state.best.present = true;
      state.best.agent_id = rec.id;
      state.best.payload = payload;
      state.best.s_raw = eval.s_raw;
      state.best.s_norm = eval.s_norm;
      state.best.iteration = 0;
    }
    state.task_pop.insert(std::move(rec));
  }
  for (const std::string& payload : optimizer_seeds) {
    AgentRecord rec;
    rec.id = state.allocate_id();
    rec.kind = AgentKind::Optimizer;
    rec.payload = payload;
    rec.score = kInitialElo;
    rec.created_at_iteration = 0;
    const AgentId id = rec.id;
    const InsertOutcome outcome = state.opt_pop.insert(std::move(rec));
    if (outcome.inserted) state.ledger.add(id, kInitialElo);
    if (outcome.evicted) state.ledger.erase(*outcome.evicted);
  }
  return state;
}

// Built-in seeds used when the configuration names no seed files.
inline std::string default_task_payload(TaskDomain task) {
  Construction c;
  switch (task) {
    case TaskDomain::CP: {
      CpCircles circles;
      for (int row = 0; row < 5; ++row)
        for (int col = 0; col < 6; ++col) {
          if (circles.size() == 26) break;
          circles.push_back(Circle{(col + 0.5) / 6.0, (row + 0.5) / 5.0, 0.05});
        }
      cp_expand(circles);
      c.data = std::move(circles);
      break;
    }
    case TaskDomain::HT: {
      HtPoints pts;
      // triangle corners, edge midpoints and an inner ring
      pts.push_back(Point{0.0, 0.0});
      pts.push_back(Point{1.0, 0.0});
      pts.push_back(Point{0.5, kSqrt3 / 2.0});
      pts.push_back(Point{0.5, 0.0});
      pts.push_back(Point{0.25, kSqrt3 / 4.0});
      pts.push_back(Point{0.75, kSqrt3 / 4.0});
      pts.push_back(Point{0.5, kSqrt3 / 6.0});
      pts.push_back(Point{0.35, kSqrt3 / 12.0});
      pts.push_back(Point{0.65, kSqrt3 / 12.0});
      pts.push_back(Point{0.5, kSqrt3 / 3.0});
      pts.push_back(Point{0.5, kSqrt3 / 24.0});
      c.data = std::move(pts);
      break;
    }
    case TaskDomain::KN: {
      KnVectors vectors;
      for (int i = 0; i < 11; ++i) {
        std::vector<std::int64_t> v(11, 0);
        v[i] = 2;
        vectors.push_back(v);
        v[i] = -2;
        vectors.push_back(v);
      }
      c.data = std::move(vectors);
      break;
    }
  }
  return dump_construction(c);
}

inline std::vector<std::string> default_optimizer_payloads() {
  std::vector<std::string> seeds;
  for (double sigma : {0.05, 0.01, 0.002}) {
    ScriptedStrategy s;
    s.sigma = sigma;
    seeds.push_back(s.dump());
  }
  return seeds;
}

}  // namespace escher
