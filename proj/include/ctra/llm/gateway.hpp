#pragma once

#include "ctra/llm/backend.hpp"
#include "ctra/llm/prompts.hpp"
#include "ctra/llm/roles.hpp"

#include <chrono>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace ctra::llm {

struct ChatExchange {
  Role role = Role::question_creation;
  std::string rendered_prompt;
  std::string raw_response;  // empty when the call failed
  std::chrono::milliseconds latency{0};
  std::string error;
};

/// Role-aware front door to a backend; keeps a transcript of every call.
class Gateway {
 public:
  Gateway(ChatBackend& backend, std::map<Role, RoleModelConfig> configs,
          const PromptLibrary& prompts = PromptLibrary::embedded());

  const PromptLibrary& prompts() const { return prompts_; }
  const RoleModelConfig& config(Role role) const;

  /// Sends a rendered prompt. Rethrows backend LlmError after logging it.
  std::string complete(Role role, const std::string& prompt);
  std::string render_and_complete(Role role, const PromptContext& ctx);

  std::vector<ChatExchange> transcript() const;

 private:
  ChatBackend& backend_;
  std::map<Role, RoleModelConfig> configs_;
  PromptLibrary prompts_;
  mutable std::mutex mutex_;
  std::vector<ChatExchange> transcript_;
};

}  // namespace ctra::llm
