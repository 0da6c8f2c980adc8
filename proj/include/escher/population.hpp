#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "escher/agents.hpp"

namespace escher {

// Optional MAP-Elites overlay. When enabled, capacity pressure is resolved by
// per-cell elitism over a 2-D behavior grid (payload length x eval count)
// instead of global weakest-eviction.
struct MapElitesConfig {
  bool enabled = false;
  int payload_buckets = 8;
  int eval_buckets = 4;
  int payload_bucket_width = 256;  // payload bytes per bucket
  int eval_bucket_width = 5;       // benchmarking rounds per bucket
};

struct InsertOutcome {
  bool inserted = false;                 // false: the candidate itself was dropped
  std::optional<AgentId> evicted;        // id removed to make room, if any
};

class Population {
 public:
  Population() = default;
  Population(AgentKind kind, std::size_t capacity, MapElitesConfig grid = {})
      : kind_(kind), capacity_(capacity), grid_(grid) {
    if (capacity_ == 0) throw Error("population capacity must be positive");
  }

  AgentKind kind() const { return kind_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const std::vector<AgentRecord>& members() const { return members_; }
  const MapElitesConfig& grid() const { return grid_; }

  bool contains(AgentId id) const { return find(id) != nullptr; }

  const AgentRecord* find(AgentId id) const {
    for (const auto& m : members_)
      if (m.id == id) return &m;
    return nullptr;
  }

  AgentRecord* find_mutable(AgentId id) {
    for (auto& m : members_)
      if (m.id == id) return &m;
    return nullptr;
  }

  // Inserts `rec`, then resolves capacity pressure. Global mode removes the
  // lowest-scoring member (ties: the older record); the fresh record is only
  // the victim when it is strictly the unique lowest. Grid mode keeps the
  // better record per behavior cell and falls back to global eviction if the
  // population still exceeds capacity.
  InsertOutcome insert(AgentRecord rec) {
    if (rec.kind != kind_) throw Error("agent kind does not match population");
    if (contains(rec.id)) throw Error("duplicate agent id " + std::to_string(rec.id));

    InsertOutcome out;
    if (grid_.enabled) {
      const auto cell = cell_of(rec);
      for (std::size_t i = 0; i < members_.size(); ++i) {
        if (cell_of(members_[i]) != cell) continue;
        if (members_[i].score >= rec.score) {
          return out;  // incumbent elite stays, candidate dropped
        }
        out.evicted = members_[i].id;
        members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(i));
        break;
      }
    }

    members_.push_back(std::move(rec));
    out.inserted = true;
    if (members_.size() > capacity_) {
      const std::size_t last = members_.size() - 1;
      bool strictly_lowest = true;
      for (std::size_t i = 0; i < last; ++i)
        if (members_[i].score <= members_[last].score) strictly_lowest = false;
      if (strictly_lowest) {
        members_.pop_back();
        out.inserted = false;
      } else {
        const std::size_t victim = weakest_index(last);
        out.evicted = members_[victim].id;
        members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(victim));
      }
    }
    return out;
  }

  // Member with maximal score; ties resolved toward the earlier creation,
  // then the smaller id.
  const AgentRecord& best() const {
    if (members_.empty()) throw Error("best() on empty population");
    const AgentRecord* top = &members_[0];
    for (const auto& m : members_) {
      if (m.score > top->score ||
          (m.score == top->score &&
           (m.created_at_iteration < top->created_at_iteration ||
            (m.created_at_iteration == top->created_at_iteration && m.id < top->id)))) {
        top = &m;
      }
    }
    return *top;
  }

  std::vector<double> scores() const {
    std::vector<double> s;
    s.reserve(members_.size());
    for (const auto& m : members_) s.push_back(m.score);
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : members_) arr.push_back(escher::to_json(m));
    return nlohmann::json{{"kind", to_string(kind_)},
                          {"capacity", capacity_},
                          {"members", std::move(arr)}};
  }

  static Population from_json(const nlohmann::json& j, MapElitesConfig grid = {}) {
    Population pop(agent_kind_from_string(j.at("kind").get<std::string>()),
                   j.at("capacity").get<std::size_t>(), grid);
    for (const auto& item : j.at("members")) pop.members_.push_back(agent_from_json(item));
    return pop;
  }

 private:
  std::pair<int, int> cell_of(const AgentRecord& rec) const {
    const int pb = std::min<int>(grid_.payload_buckets - 1,
                                 static_cast<int>(rec.payload.size()) / grid_.payload_bucket_width);
    const int eb = std::min<int>(grid_.eval_buckets - 1,
                                 static_cast<int>(rec.eval_count) / grid_.eval_bucket_width);
    return {pb, eb};
  }

  // Weakest among the first `end` members: lowest score, ties toward the
  // older record, then the smaller id.
  std::size_t weakest_index(std::size_t end) const {
    std::size_t victim = 0;
    for (std::size_t i = 1; i < end; ++i) {
      const AgentRecord& a = members_[i];
      const AgentRecord& b = members_[victim];
      if (a.score < b.score ||
          (a.score == b.score &&
           (a.created_at_iteration < b.created_at_iteration ||
            (a.created_at_iteration == b.created_at_iteration && a.id < b.id)))) {
        victim = i;
      }
    }
    return victim;
  }

  AgentKind kind_ = AgentKind::Task;
  std::size_t capacity_ = 1;
  MapElitesConfig grid_;
  std::vector<AgentRecord> members_;
};

}  // namespace escher
