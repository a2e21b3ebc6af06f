#include "ctra/llm/gateway.hpp"

namespace ctra::llm {

Gateway::Gateway(ChatBackend& backend, std::map<Role, RoleModelConfig> configs, const PromptLibrary& prompts)
    : backend_(backend), configs_(std::move(configs)), prompts_(prompts) {
  for (Role r : kAllRoles) configs_.try_emplace(r, default_role_config(r));
}

const RoleModelConfig& Gateway::config(Role role) const { return configs_.at(role); }

std::string Gateway::complete(Role role, const std::string& prompt) {
  ChatExchange ex;
  ex.role = role;
  ex.rendered_prompt = prompt;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ex.raw_response = backend_.complete(config(role), prompt);
  } catch (const LlmError& e) {
    ex.error = e.what();
    ex.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
    std::lock_guard lock(mutex_);
    transcript_.push_back(std::move(ex));
    throw;
  }
  ex.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
  std::string out = ex.raw_response;
  std::lock_guard lock(mutex_);
  transcript_.push_back(std::move(ex));
  return out;
}

std::string Gateway::render_and_complete(Role role, const PromptContext& ctx) {
  return complete(role, prompts_.render(role, ctx));
}

std::vector<ChatExchange> Gateway::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

}  // namespace ctra::llm
