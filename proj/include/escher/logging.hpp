#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "escher/agents.hpp"

namespace escher {

// Append-only JSONL run log. Events carry only deterministic fields so a
// resumed run reproduces the original byte stream.
class RunLog {
 public:
  RunLog() = default;

  explicit RunLog(const std::filesystem::path& path) { open(path); }

  void open(const std::filesystem::path& path) {
    stream_.open(path, std::ios::app);
    if (!stream_) throw Error("cannot open run log: " + path.string());
  }

  bool is_open() const { return stream_.is_open(); }

  void write(const nlohmann::json& event) {
    if (!stream_.is_open()) return;
    stream_ << event.dump() << "\n";
    stream_.flush();
  }

 private:
  std::ofstream stream_;
};

}  // namespace escher
