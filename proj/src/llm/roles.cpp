#include "ctra/llm/roles.hpp"

namespace ctra::llm {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::question_creation: return "question_creation";
    case Role::query_builder: return "query_builder";
    case Role::code_check: return "code_check";
    case Role::reflect: return "reflect";
    case Role::report: return "report";
    case Role::chart: return "chart";
  }
  return "?";
}

std::optional<Role> role_from_name(std::string_view name) {
  for (Role r : kAllRoles) {
    if (role_name(r) == name) return r;
  }
  return std::nullopt;
}

RoleModelConfig default_role_config(Role role, std::string endpoint) {
  RoleModelConfig c;
  c.role = role;
  c.endpoint = std::move(endpoint);
  switch (role) {
    case Role::question_creation:
    case Role::chart: c.model_name = "meta-llama/Llama-3.1-70B-Instruct"; break;
    case Role::query_builder:
    case Role::code_check:
    case Role::reflect: c.model_name = "deepseek-ai/DeepSeek-R1"; break;
    case Role::report: c.model_name = "meta-llama/Llama-3.1-405B-Instruct"; break;
  }
  return c;
}

std::map<Role, RoleModelConfig> default_role_configs(std::string endpoint) {
  std::map<Role, RoleModelConfig> out;
  for (Role r : kAllRoles) out.emplace(r, default_role_config(r, endpoint));
  return out;
}

}  // namespace ctra::llm
