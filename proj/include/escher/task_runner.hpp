#pragma once

#include <stdlib.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "escher/construction.hpp"
#include "escher/evaluators.hpp"
#include "escher/subprocess.hpp"

namespace escher {

struct AgentExecConfig {
  ExecLimits limits;
  std::vector<std::string> interpreter = {"python3"};  // used when no shebang
  std::filesystem::path scratch_dir = std::filesystem::temp_directory_path();
};

struct RunAgentOutcome {
  bool ok = false;
  Construction construction;
  std::string violation;
  double wall_time_s = 0.0;
};

namespace detail {

inline bool looks_like_document(const std::string& payload) {
  for (char c : payload) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
    return c == '{';
  }
  return false;
}

class ScratchFile {
 public:
  explicit ScratchFile(const std::filesystem::path& dir) {
    std::string templ = (dir / "escher_agent_XXXXXX").string();
    std::vector<char> buf(templ.begin(), templ.end());
    buf.push_back('\0');
    fd_ = mkstemp(buf.data());
    path_ = std::string(buf.data());
  }
  ~ScratchFile() {
    if (fd_ >= 0) close(fd_);
    if (!path_.empty()) std::remove(path_.c_str());
  }
  bool write(const std::string& text) {
    if (fd_ < 0) return false;
    return ::write(fd_, text.data(), text.size()) == static_cast<ssize_t>(text.size());
  }
  const std::string& path() const { return path_; }
  bool valid() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
  std::string path_;
};

}  // namespace detail

// A task-agent payload is either a literal construction document or a program
// that prints one on standard output. Programs run sandboxed: shebang payloads
// execute directly, anything else goes through the configured interpreter.
inline RunAgentOutcome run_task_agent(const std::string& payload, const AgentExecConfig& cfg) {
  RunAgentOutcome outcome;

  if (detail::looks_like_document(payload)) {
    try {
      outcome.construction = parse_construction(payload);
      outcome.ok = true;
    } catch (const ConstructionParseError& e) {
      outcome.violation = std::string("malformed construction: ") + e.what();
    }
    return outcome;
  }

  detail::ScratchFile file(cfg.scratch_dir);
  if (!file.valid() || !file.write(payload)) {
    outcome.violation = "could not stage program for execution";
    return outcome;
  }

  std::vector<std::string> argv;
  if (payload.rfind("#!", 0) == 0) {
    std::filesystem::permissions(file.path(), std::filesystem::perms::owner_all,
                                 std::filesystem::perm_options::add);
    argv = {file.path()};
  } else {
    argv = cfg.interpreter;
    argv.push_back(file.path());
  }

  const ExecResult exec = run_with_limits(argv, cfg.limits);
  outcome.wall_time_s = exec.wall_time_s;
  if (!exec.started) {
    outcome.violation = "failed to launch program";
    return outcome;
  }
  if (exec.timed_out) {
    outcome.violation = "timeout";
    return outcome;
  }
  if (exec.exit_code != 0) {
    outcome.violation = "program exited with status " + std::to_string(exec.exit_code);
    return outcome;
  }

  std::string text = exec.out;
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) {
    outcome.violation = "no construction emitted";
    return outcome;
  }
  const auto end = text.find_last_not_of(" \t\r\n");
  text = text.substr(begin, end - begin + 1);
  try {
    outcome.construction = parse_construction(text);
    outcome.ok = true;
  } catch (const ConstructionParseError& e) {
    outcome.violation = std::string("malformed output: ") + e.what();
  }
  return outcome;
}

// Full evaluation path for a task-agent payload. Counts every invocation so
// the engine can prove the reused-score property (task evaluations are the
// only evaluations; Elo updates add none).
class TaskEvaluator {
 public:
  TaskEvaluator(TaskSpec spec, AgentExecConfig exec) : spec_(spec), exec_(std::move(exec)) {
    exec_.limits.timeout_s = spec_.exec_timeout_s;
  }

  const TaskSpec& spec() const { return spec_; }
  long invocations() const { return invocations_; }

  EvalResult evaluate_payload(const std::string& payload) const {
    ++invocations_;
    const RunAgentOutcome run = run_task_agent(payload, exec_);
    if (!run.ok) {
      EvalResult r = detail::invalid_result(run.violation);
      r.wall_time_s = run.wall_time_s;
      return r;
    }
    EvalResult r = evaluate_construction(run.construction, spec_);
    r.wall_time_s = run.wall_time_s;
    return r;
  }

 private:
  TaskSpec spec_;
  AgentExecConfig exec_;
  mutable std::atomic<long> invocations_{0};
};

}  // namespace escher
