#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "escher/agents.hpp"

namespace escher {

enum class TaskDomain { KN, CP, HT };

inline const char* to_string(TaskDomain task) {
  switch (task) {
    case TaskDomain::KN: return "kn";
    case TaskDomain::CP: return "cp";
    case TaskDomain::HT: return "ht";
  }
  return "?";
}

inline TaskDomain task_from_string(const std::string& text) {
  if (text == "kn") return TaskDomain::KN;
  if (text == "cp") return TaskDomain::CP;
  if (text == "ht") return TaskDomain::HT;
  throw Error("unknown task: " + text);
}

struct Circle {
  double x = 0.0, y = 0.0, r = 0.0;
};

struct Point {
  double x = 0.0, y = 0.0;
};

using KnVectors = std::vector<std::vector<std::int64_t>>;
using CpCircles = std::vector<Circle>;
using HtPoints = std::vector<Point>;

// A typed geometric solution. Wire format is one JSON document:
//   {"task":"kn","vectors":[[..11 ints..],...]}
//   {"task":"cp","circles":[[x,y,r],...]}
//   {"task":"ht","points":[[x,y],...]}
struct Construction {
  std::variant<KnVectors, CpCircles, HtPoints> data;

  TaskDomain task() const {
    switch (data.index()) {
      case 0: return TaskDomain::KN;
      case 1: return TaskDomain::CP;
      default: return TaskDomain::HT;
    }
  }

  const KnVectors& vectors() const { return std::get<KnVectors>(data); }
  const CpCircles& circles() const { return std::get<CpCircles>(data); }
  const HtPoints& points() const { return std::get<HtPoints>(data); }
};

struct ConstructionParseError : Error {
  using Error::Error;
};

namespace detail {

inline std::int64_t require_integer(const nlohmann::json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  throw ConstructionParseError("vector components must be integers");
}

inline double require_number(const nlohmann::json& v) {
  if (!v.is_number()) throw ConstructionParseError("expected a number");
  return v.get<double>();
}

}  // namespace detail

inline Construction construction_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConstructionParseError("construction must be a JSON object");
  if (!j.contains("task") || !j.at("task").is_string())
    throw ConstructionParseError("construction is missing the \"task\" key");
  const TaskDomain task = task_from_string(j.at("task").get<std::string>());

  Construction c;
  switch (task) {
    case TaskDomain::KN: {
      if (!j.contains("vectors") || !j.at("vectors").is_array())
        throw ConstructionParseError("kn construction needs a \"vectors\" array");
      KnVectors vectors;
      for (const auto& row : j.at("vectors")) {
        if (!row.is_array()) throw ConstructionParseError("each vector must be an array");
        std::vector<std::int64_t> v;
        v.reserve(row.size());
        for (const auto& comp : row) v.push_back(detail::require_integer(comp));
        vectors.push_back(std::move(v));
      }
      c.data = std::move(vectors);
      break;
    }
    case TaskDomain::CP: {
      if (!j.contains("circles") || !j.at("circles").is_array())
        throw ConstructionParseError("cp construction needs a \"circles\" array");
      CpCircles circles;
      for (const auto& row : j.at("circles")) {
        if (!row.is_array() || row.size() != 3)
          throw ConstructionParseError("each circle must be [x, y, r]");
        circles.push_back(Circle{detail::require_number(row[0]), detail::require_number(row[1]),
                                 detail::require_number(row[2])});
      }
      c.data = std::move(circles);
      break;
    }
    case TaskDomain::HT: {
      if (!j.contains("points") || !j.at("points").is_array())
        throw ConstructionParseError("ht construction needs a \"points\" array");
      HtPoints points;
      for (const auto& row : j.at("points")) {
        if (!row.is_array() || row.size() != 2)
          throw ConstructionParseError("each point must be [x, y]");
        points.push_back(Point{detail::require_number(row[0]), detail::require_number(row[1])});
      }
      c.data = std::move(points);
      break;
    }
  }
  return c;
}

inline Construction parse_construction(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConstructionParseError("construction is not valid JSON");
  return construction_from_json(j);
}

inline nlohmann::json construction_to_json(const Construction& c) {
  nlohmann::json j{{"task", to_string(c.task())}};
  switch (c.task()) {
    case TaskDomain::KN: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& v : c.vectors()) arr.push_back(v);
      j["vectors"] = std::move(arr);
      break;
    }
    case TaskDomain::CP: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& circ : c.circles())
        arr.push_back(nlohmann::json::array({circ.x, circ.y, circ.r}));
      j["circles"] = std::move(arr);
      break;
    }
    case TaskDomain::HT: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& p : c.points()) arr.push_back(nlohmann::json::array({p.x, p.y}));
      j["points"] = std::move(arr);
      break;
    }
  }
  return j;
}

inline std::string dump_construction(const Construction& c) {
  return construction_to_json(c).dump();
}

}  // namespace escher
