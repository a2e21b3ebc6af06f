#pragma once

#include "ctra/llm/errors.hpp"
#include "ctra/llm/roles.hpp"

#include <chrono>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace ctra::llm {

/// A chat-completion service. Implementations are safe for concurrent calls.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Returns the assistant message text or throws LlmError.
  virtual std::string complete(const RoleModelConfig& config, const std::string& prompt) = 0;
};

struct HttpOptions {
  std::string api_key;
  int retries = 1;
  std::chrono::milliseconds backoff{500};
  /// Cap on honoring a server Retry-After.
  std::chrono::milliseconds max_retry_wait{5'000};
};

/// OpenAI-compatible `POST <endpoint>/chat/completions` with one user message.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpOptions options) : options_(std::move(options)) {}
  std::string complete(const RoleModelConfig& config, const std::string& prompt) override;

 private:
  HttpOptions options_;
};

struct ReplayEntry {
  Role role = Role::question_creation;
  std::string prompt_sha256;
  std::string response;
};

std::vector<ReplayEntry> read_replay_file(const std::filesystem::path& path);
void write_replay_file(const std::vector<ReplayEntry>& entries, const std::filesystem::path& path);

/// Serves recorded responses by prompt hash. Several entries with one hash are
/// served in file order; the last one repeats.
class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(const std::vector<ReplayEntry>& entries);
  static std::unique_ptr<ReplayBackend> load(const std::filesystem::path& path);

  std::string complete(const RoleModelConfig& config, const std::string& prompt) override;

 private:
  struct Slot {
    std::vector<std::string> responses;
    std::size_t next = 0;
  };
  std::mutex mutex_;
  std::map<std::string, Slot> slots_;
};

/// One scripted reply: text, or a simulated transport failure.
struct ScriptStep {
  std::string text;
  std::optional<LlmError::Kind> failure;

  static ScriptStep reply(std::string text) { return {std::move(text), std::nullopt}; }
  static ScriptStep fail(LlmError::Kind kind) { return {{}, kind}; }
};

/// Answers each role from its own queue in order; the last step repeats.
/// A role with no steps fails with a transport error.
class ScriptedBackend final : public ChatBackend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::map<Role, std::vector<ScriptStep>> script) : script_(std::move(script)) {}

  /// JSON object {"<role>": ["text" | {"error": "timeout"|"transport"}, ...], ...}.
  static std::unique_ptr<ScriptedBackend> load(const std::filesystem::path& path);

  void push(Role role, ScriptStep step);
  std::string complete(const RoleModelConfig& config, const std::string& prompt) override;
  std::size_t calls(Role role) const;

 private:
  mutable std::mutex mutex_;
  std::map<Role, std::vector<ScriptStep>> script_;
  std::map<Role, std::size_t> served_;
};

/// Forwards to another backend and keeps every successful exchange for a replay file.
class RecordingBackend final : public ChatBackend {
 public:
  explicit RecordingBackend(ChatBackend& inner) : inner_(inner) {}
  std::string complete(const RoleModelConfig& config, const std::string& prompt) override;
  std::vector<ReplayEntry> entries() const;

 private:
  ChatBackend& inner_;
  mutable std::mutex mutex_;
  std::vector<ReplayEntry> entries_;
};

}  // namespace ctra::llm
