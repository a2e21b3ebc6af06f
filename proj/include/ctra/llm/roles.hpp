#pragma once

#include <array>
#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace ctra::llm {

enum class Role { question_creation, query_builder, code_check, reflect, report, chart };

inline constexpr std::array<Role, 6> kAllRoles = {Role::question_creation, Role::query_builder,
                                                  Role::code_check,        Role::reflect,
                                                  Role::report,            Role::chart};

std::string_view role_name(Role role);
std::optional<Role> role_from_name(std::string_view name);

struct RoleModelConfig {
  Role role = Role::question_creation;
  std::string model_name;
  double temperature = 0.7;
  int max_tokens = 4000;
  std::string endpoint;
  std::chrono::milliseconds timeout{120'000};
};

RoleModelConfig default_role_config(Role role, std::string endpoint = {});
std::map<Role, RoleModelConfig> default_role_configs(std::string endpoint = {});

}  // namespace ctra::llm
