#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <string>
#include <vector>

#include "escher/agents.hpp"

namespace escher {

struct ExecLimits {
  double timeout_s = 120.0;
  long memory_mb = 512;                    // RLIMIT_AS; <= 0 disables the cap
  std::size_t max_output_bytes = 8u << 20; // stdout capture cap
};

struct ExecResult {
  bool started = false;
  bool timed_out = false;
  int exit_code = -1;     // -signal when killed by a signal
  std::string out;
  std::string err;
  double wall_time_s = 0.0;
};

// Runs argv as a subprocess in its own session with resource limits and a
// wall-clock deadline. Evolved programs are untrusted: the whole process
// group is killed on timeout and output capture is bounded.
inline ExecResult run_with_limits(const std::vector<std::string>& argv, const ExecLimits& limits) {
  ExecResult result;
  if (argv.empty()) return result;

  int out_pipe[2], err_pipe[2];
  if (pipe(out_pipe) != 0) return result;
  if (pipe(err_pipe) != 0) {
    close(out_pipe[0]);
    close(out_pipe[1]);
    return result;
  }

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) close(fd);
    return result;
  }

  if (pid == 0) {
    setsid();
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) close(fd);
    const int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);

    if (limits.memory_mb > 0) {
      rlimit mem{};
      mem.rlim_cur = mem.rlim_max = static_cast<rlim_t>(limits.memory_mb) * 1024 * 1024;
      setrlimit(RLIMIT_AS, &mem);
    }
    rlimit cpu{};
    cpu.rlim_cur = cpu.rlim_max = static_cast<rlim_t>(limits.timeout_s) + 2;
    setrlimit(RLIMIT_CPU, &cpu);
    rlimit core{};
    core.rlim_cur = core.rlim_max = 0;
    setrlimit(RLIMIT_CORE, &core);

    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }

  close(out_pipe[1]);
  close(err_pipe[1]);
  result.started = true;

  const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(limits.timeout_s));
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  bool open_fd[2] = {true, true};
  char buf[65536];

  while (open_fd[0] || open_fd[1]) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      kill(-pid, SIGKILL);
      break;
    }
    const int wait_ms = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1);
    fds[0].fd = open_fd[0] ? out_pipe[0] : -1;
    fds[1].fd = open_fd[1] ? err_pipe[0] : -1;
    const int rc = poll(fds, 2, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (rc == 0) continue;  // loop re-checks the deadline
    for (int s = 0; s < 2; ++s) {
      if (!open_fd[s] || !(fds[s].revents & (POLLIN | POLLHUP))) continue;
      const ssize_t n = read(fds[s].fd, buf, sizeof(buf));
      if (n > 0) {
        std::string& sink = s == 0 ? result.out : result.err;
        if (sink.size() < limits.max_output_bytes)
          sink.append(buf, buf + std::min<std::size_t>(static_cast<std::size_t>(n),
                                                       limits.max_output_bytes - sink.size()));
      } else {
        open_fd[s] = false;
      }
    }
  }
  close(out_pipe[0]);
  close(err_pipe[0]);

  // The pipes closing does not mean the child exited: reap with the same
  // deadline, then kill the whole group.
  int status = 0;
  while (!result.timed_out) {
    const pid_t reaped = waitpid(pid, &status, WNOHANG);
    if (reaped == pid || reaped < 0) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      result.timed_out = true;
      break;
    }
    usleep(2000);
  }
  if (result.timed_out) {
    kill(-pid, SIGKILL);
    kill(pid, SIGKILL);
    waitpid(pid, &status, 0);
    result.exit_code = -SIGKILL;
  } else if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit_code = -WTERMSIG(status);
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace escher
