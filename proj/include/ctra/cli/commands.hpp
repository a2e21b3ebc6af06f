#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ctra::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitAllFailed = 2;
inline constexpr int kExitInvalidSql = 3;

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment.
EnvLookup system_env();

struct Io {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  EnvLookup env = system_env();
};

/// `ctra <subcommand> ...`; argv[0] is the program name.
int run_cli(const std::vector<std::string>& argv, Io io);

/// Replaces every occurrence of `secret` with "[REDACTED]".
std::string redact(std::string text, const std::string& secret);

}  // namespace ctra::cli
