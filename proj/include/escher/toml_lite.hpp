#pragma once

#include <cctype>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "escher/agents.hpp"

namespace escher {

struct TomlError : Error {
  using Error::Error;
};

// Small TOML reader covering the subset used by run configuration files:
// comments, [tables], [[arrays of tables]], bare keys, basic and literal
// strings, integers, floats, booleans and single-line-or-wrapped arrays of
// scalars. Parses into a JSON tree.
namespace toml_lite {

namespace detail {

inline void fail(std::size_t line, const std::string& what) {
  throw TomlError("toml line " + std::to_string(line) + ": " + what);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a string.
inline std::string strip_comment(const std::string& s) {
  bool in_basic = false, in_literal = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_basic) {
      if (c == '\\') ++i;
      else if (c == '"') in_basic = false;
    } else if (in_literal) {
      if (c == '\'') in_literal = false;
    } else if (c == '"') {
      in_basic = true;
    } else if (c == '\'') {
      in_literal = true;
    } else if (c == '#') {
      return s.substr(0, i);
    }
  }
  return s;
}

inline std::vector<std::string> split_path(const std::string& text, std::size_t line) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == '.') {
      if (cur.empty()) fail(line, "empty path segment");
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (trim(cur).empty()) fail(line, "empty path segment");
  parts.push_back(trim(cur));
  return parts;
}

struct ValueParser {
  const std::string& text;
  std::size_t pos = 0;
  std::size_t line;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }

  nlohmann::json parse_value() {
    skip_ws();
    if (pos >= text.size()) fail(line, "missing value");
    const char c = text[pos];
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    return parse_scalar();
  }

  nlohmann::json parse_basic_string() {
    ++pos;
    std::string out;
    while (pos < text.size() && text[pos] != '"') {
      char c = text[pos];
      if (c == '\\') {
        ++pos;
        if (pos >= text.size()) fail(line, "dangling escape");
        switch (text[pos]) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case 'r': c = '\r'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(line, "unsupported escape");
        }
      }
      out += c;
      ++pos;
    }
    if (pos >= text.size()) fail(line, "unterminated string");
    ++pos;
    return out;
  }

  nlohmann::json parse_literal_string() {
    ++pos;
    const std::size_t end = text.find('\'', pos);
    if (end == std::string::npos) fail(line, "unterminated literal string");
    std::string out = text.substr(pos, end - pos);
    pos = end + 1;
    return out;
  }

  nlohmann::json parse_array() {
    ++pos;  // '['
    nlohmann::json arr = nlohmann::json::array();
    while (true) {
      skip_ws();
      if (pos >= text.size()) fail(line, "unterminated array");
      if (text[pos] == ']') {
        ++pos;
        return arr;
      }
      arr.push_back(parse_value());
      skip_ws();
      if (pos < text.size() && text[pos] == ',') {
        ++pos;
        continue;
      }
      if (pos < text.size() && text[pos] == ']') {
        ++pos;
        return arr;
      }
      fail(line, "expected ',' or ']' in array");
    }
  }

  nlohmann::json parse_scalar() {
    std::size_t end = pos;
    while (end < text.size() && text[end] != ',' && text[end] != ']') ++end;
    const std::string token = trim(text.substr(pos, end - pos));
    pos = end;
    if (token.empty()) fail(line, "empty value");
    if (token == "true") return true;
    if (token == "false") return false;

    std::string digits;
    for (char c : token)
      if (c != '_') digits += c;
    const bool looks_float = digits.find_first_of(".eE") != std::string::npos;
    try {
      std::size_t used = 0;
      if (!looks_float) {
        const long long v = std::stoll(digits, &used);
        if (used == digits.size()) return v;
      }
      const double d = std::stod(digits, &used);
      if (used == digits.size()) return d;
    } catch (...) {
    }
    fail(line, "cannot parse value: " + token);
    return nullptr;
  }
};

inline nlohmann::json* descend(nlohmann::json& root, const std::vector<std::string>& path,
                               std::size_t line) {
  nlohmann::json* node = &root;
  for (const std::string& key : path) {
    if (node->is_array()) node = &node->back();
    if (!node->is_object()) fail(line, "path collides with a non-table value");
    node = &(*node)[key];
    if (node->is_null()) *node = nlohmann::json::object();
  }
  if (node->is_array()) node = &node->back();
  return node;
}

}  // namespace detail

inline nlohmann::json parse(const std::string& text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* current = &root;

  std::vector<std::string> lines;
  {
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        lines.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    lines.push_back(cur);
  }

  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    const std::size_t line_no = idx + 1;
    std::string line = detail::trim(detail::strip_comment(lines[idx]));
    if (line.empty()) continue;

    if (line.rfind("[[", 0) == 0) {
      const std::size_t close = line.find("]]");
      if (close == std::string::npos) detail::fail(line_no, "unterminated [[table]]");
      const auto path = detail::split_path(line.substr(2, close - 2), line_no);
      nlohmann::json* node = &root;
      for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (node->is_array()) node = &node->back();
        node = &(*node)[path[i]];
        if (node->is_null()) *node = nlohmann::json::object();
      }
      if (node->is_array()) node = &node->back();
      nlohmann::json& slot = (*node)[path.back()];
      if (slot.is_null()) slot = nlohmann::json::array();
      if (!slot.is_array()) detail::fail(line_no, "[[ ]] target is not an array");
      slot.push_back(nlohmann::json::object());
      current = &slot.back();
      continue;
    }
    if (line.front() == '[') {
      const std::size_t close = line.find(']');
      if (close == std::string::npos) detail::fail(line_no, "unterminated [table]");
      const auto path = detail::split_path(line.substr(1, close - 1), line_no);
      current = detail::descend(root, path, line_no);
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) detail::fail(line_no, "expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    if (key.size() >= 2 && ((key.front() == '"' && key.back() == '"') ||
                            (key.front() == '\'' && key.back() == '\'')))
      key = key.substr(1, key.size() - 2);
    if (key.empty()) detail::fail(line_no, "empty key");

    // Wrapped arrays: keep consuming lines until the brackets balance.
    std::string value_text = line.substr(eq + 1);
    long depth = 0;
    for (char c : value_text)
      if (c == '[') ++depth;
      else if (c == ']') --depth;
    while (depth > 0 && idx + 1 < lines.size()) {
      ++idx;
      const std::string more = detail::strip_comment(lines[idx]);
      value_text += " " + more;
      for (char c : more)
        if (c == '[') ++depth;
        else if (c == ']') --depth;
    }

    detail::ValueParser parser{value_text, 0, line_no};
    nlohmann::json value = parser.parse_value();
    parser.skip_ws();
    if (parser.pos < value_text.size() && !detail::trim(value_text.substr(parser.pos)).empty())
      detail::fail(line_no, "trailing characters after value");
    (*current)[key] = std::move(value);
  }
  return root;
}

}  // namespace toml_lite
}  // namespace escher
