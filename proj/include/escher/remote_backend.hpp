#pragma once

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "httplib.h"

#include "escher/generation.hpp"
#include "escher/scripted_backend.hpp"

namespace escher {

// Weighted routing draw across endpoint profiles.
inline std::size_t pick_profile(const std::vector<EndpointProfile>& routing, Rng& rng) {
  if (routing.empty()) throw Error("pick_profile: no profiles configured");
  const double u = uniform_unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < routing.size(); ++i) {
    acc += routing[i].weight;
    if (u < acc) return i;
  }
  return routing.size() - 1;
}

// The operator payload is a prompt-builder template. {{PARENTS}} expands to
// one block per parent (score header + fenced payload); {{TARGET}} expands to
// "task" or "optimizer". A template without {{PARENTS}} gets the blocks
// appended, so an evolved template can never silently drop its inputs.
inline std::string render_prompt(const std::string& templ,
                                 const std::vector<std::pair<std::string, double>>& parents,
                                 AgentKind target_kind) {
  std::ostringstream blocks;
  for (const auto& [payload, score] : parents) {
    blocks << "### score: " << score << "\n```\n" << payload << "\n```\n";
  }
  std::string prompt = templ;
  auto replace_all = [](std::string& text, const std::string& needle, const std::string& value) {
    bool found = false;
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
      text.replace(pos, needle.size(), value);
      pos += value.size();
      found = true;
    }
    return found;
  };
  const bool had_parents = replace_all(prompt, "{{PARENTS}}", blocks.str());
  replace_all(prompt, "{{TARGET}}", target_kind == AgentKind::Task ? "task" : "optimizer");
  if (!had_parents) prompt += "\n" + blocks.str();
  return prompt;
}

// Pulls the generated payload out of a chat response: first fenced code block
// when present, otherwise the whole message, trimmed.
inline std::string extract_payload(const std::string& content) {
  const std::size_t open = content.find("```");
  if (open != std::string::npos) {
    std::size_t body = content.find('\n', open);
    if (body != std::string::npos) {
      const std::size_t close = content.find("```", body + 1);
      if (close != std::string::npos) {
        std::string inner = content.substr(body + 1, close - body - 1);
        while (!inner.empty() && (inner.back() == '\n' || inner.back() == '\r')) inner.pop_back();
        return inner;
      }
    }
  }
  const std::size_t begin = content.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const std::size_t end = content.find_last_not_of(" \t\r\n");
  return content.substr(begin, end - begin + 1);
}

// Chat-completion backend compatible with the de-facto messages/usage schema.
// Each attempt's tokens are charged, failed attempts included; when a failed
// attempt reports no usage, the input side is estimated from the prompt size.
class RemoteChatBackend : public GenerationBackend {
 public:
  explicit RemoteChatBackend(BackendConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  std::string label() const override { return "remote-chat"; }

  GenerationResult generate(const GenerationRequest& req, Rng& rng) override {
    GenerationResult result;
    const std::string prompt = render_prompt(req.operator_agent.payload, req.parents,
                                             req.target_kind);
    const std::size_t profile_idx = pick_profile(cfg_.routing, rng);
    const EndpointProfile& profile = cfg_.routing[profile_idx];
    result.backend_label = label() + ":" + profile.name;

    const char* key = std::getenv(profile.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      result.error = "missing credentials: set " + profile.api_key_env;
      return result;
    }

    nlohmann::json body{{"model", profile.model},
                        {"messages", nlohmann::json::array({nlohmann::json{
                                         {"role", "user"}, {"content", prompt}}})},
                        {"temperature", req.temperature},
                        {"max_tokens", req.max_output_tokens}};
    for (auto it = profile.extra.begin(); it != profile.extra.end(); ++it) body[it.key()] = *it;
    const std::string body_text = body.dump();

    std::string last_error = "no attempts made";
    const int attempts = 1 + std::max(0, req.retries);  // initial try plus retries
    for (int attempt = 0; attempt < attempts; ++attempt) {
      httplib::Client client(profile.base_url);
      client.set_connection_timeout(static_cast<time_t>(req.timeout_s), 0);
      client.set_read_timeout(static_cast<time_t>(req.timeout_s), 0);
      client.set_write_timeout(static_cast<time_t>(req.timeout_s), 0);
      httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

      auto res = client.Post(profile.path, headers, body_text, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        result.tokens_in += synthetic_token_count(prompt);
        continue;
      }

      nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
      std::int64_t in_tokens = synthetic_token_count(prompt);
      std::int64_t out_tokens = 0;
      if (!reply.is_discarded() && reply.contains("usage")) {
        const auto& usage = reply.at("usage");
        if (usage.contains("prompt_tokens")) in_tokens = usage.at("prompt_tokens").get<std::int64_t>();
        if (usage.contains("completion_tokens"))
          out_tokens = usage.at("completion_tokens").get<std::int64_t>();
      }
      result.tokens_in += in_tokens;
      result.tokens_out += out_tokens;

      if (res->status != 200) {
        last_error = "http status " + std::to_string(res->status);
        continue;
      }
      if (reply.is_discarded() || !reply.contains("choices") || reply.at("choices").empty()) {
        last_error = "malformed completion response";
        continue;
      }
      const auto& message = reply.at("choices").at(0).at("message");
      result.payload = extract_payload(message.at("content").get<std::string>());
      if (result.payload.empty()) {
        last_error = "empty completion";
        continue;
      }
      result.ok = true;
      return result;
    }
    result.error = last_error;
    return result;
  }

 private:
  BackendConfig cfg_;
};

inline std::unique_ptr<GenerationBackend> make_backend(const BackendConfig& cfg) {
  cfg.validate();
  if (cfg.mode == BackendMode::Scripted) return std::make_unique<ScriptedBackend>();
  return std::make_unique<RemoteChatBackend>(cfg);
}

}  // namespace escher
