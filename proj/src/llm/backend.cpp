#include "ctra/llm/backend.hpp"

#include "ctra/core/hash.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace ctra::llm {

std::vector<ReplayEntry> read_replay_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LlmError(LlmError::Kind::transport, "cannot open replay file: " + path.string());
  std::vector<ReplayEntry> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ReplayEntry e;
      auto role = role_from_name(j.at("role").get<std::string>());
      if (!role) throw std::invalid_argument("unknown role");
      e.role = *role;
      e.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
      e.response = j.at("response").get<std::string>();
      out.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw LlmError(LlmError::Kind::bad_response,
                     path.string() + ":" + std::to_string(number) + ": bad replay entry: " + ex.what());
    }
  }
  return out;
}

void write_replay_file(const std::vector<ReplayEntry>& entries, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LlmError(LlmError::Kind::transport, "cannot write replay file: " + path.string());
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["role"] = std::string(role_name(e.role));
    j["prompt_sha256"] = e.prompt_sha256;
    j["response"] = e.response;
    out << j.dump() << '\n';
  }
}

ReplayBackend::ReplayBackend(const std::vector<ReplayEntry>& entries) {
  for (const auto& e : entries) slots_[e.prompt_sha256].responses.push_back(e.response);
}

std::unique_ptr<ReplayBackend> ReplayBackend::load(const std::filesystem::path& path) {
  return std::make_unique<ReplayBackend>(read_replay_file(path));
}

std::string ReplayBackend::complete(const RoleModelConfig& config, const std::string& prompt) {
  const std::string hash = sha256_hex(prompt);
  std::lock_guard lock(mutex_);
  auto it = slots_.find(hash);
  if (it == slots_.end()) {
    LlmError e(LlmError::Kind::replay_miss,
               "replay miss for role " + std::string(role_name(config.role)) + ", prompt sha256 " + hash);
    e.prompt_hash = hash;
    throw e;
  }
  Slot& s = it->second;
  const std::string& r = s.responses[std::min(s.next, s.responses.size() - 1)];
  if (s.next < s.responses.size()) ++s.next;
  return r;
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LlmError(LlmError::Kind::transport, "cannot open script file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& ex) {
    throw LlmError(LlmError::Kind::bad_response, path.string() + ": " + ex.what());
  }
  auto backend = std::make_unique<ScriptedBackend>();
  if (!j.is_object()) throw LlmError(LlmError::Kind::bad_response, path.string() + ": expected an object");
  for (const auto& [key, steps] : j.items()) {
    auto role = role_from_name(key);
    if (!role || !steps.is_array()) {
      throw LlmError(LlmError::Kind::bad_response, path.string() + ": bad entry for '" + key + "'");
    }
    for (const auto& s : steps) {
      if (s.is_string()) {
        backend->push(*role, ScriptStep::reply(s.get<std::string>()));
      } else if (s.is_object() && s.contains("error")) {
        backend->push(*role, ScriptStep::fail(s["error"] == "timeout" ? LlmError::Kind::timeout
                                                                     : LlmError::Kind::transport));
      } else {
        throw LlmError(LlmError::Kind::bad_response, path.string() + ": bad step for '" + key + "'");
      }
    }
  }
  return backend;
}

void ScriptedBackend::push(Role role, ScriptStep step) {
  std::lock_guard lock(mutex_);
  script_[role].push_back(std::move(step));
}

std::string ScriptedBackend::complete(const RoleModelConfig& config, const std::string&) {
  std::lock_guard lock(mutex_);
  auto it = script_.find(config.role);
  if (it == script_.end() || it->second.empty()) {
    throw LlmError(LlmError::Kind::transport, "no scripted response for role " + std::string(role_name(config.role)));
  }
  std::size_t& n = served_[config.role];
  const ScriptStep& step = it->second[std::min(n, it->second.size() - 1)];
  ++n;
  if (step.failure) {
    throw LlmError(*step.failure, *step.failure == LlmError::Kind::timeout ? "request timed out (scripted)"
                                                                            : "transport failure (scripted)");
  }
  return step.text;
}

std::size_t ScriptedBackend::calls(Role role) const {
  std::lock_guard lock(mutex_);
  auto it = served_.find(role);
  return it == served_.end() ? 0 : it->second;
}

std::string RecordingBackend::complete(const RoleModelConfig& config, const std::string& prompt) {
  std::string response = inner_.complete(config, prompt);
  std::lock_guard lock(mutex_);
  entries_.push_back({config.role, sha256_hex(prompt), response});
  return response;
}

std::vector<ReplayEntry> RecordingBackend::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

}  // namespace ctra::llm
