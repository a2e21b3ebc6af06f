#pragma once

#include <filesystem>
#include <string>

namespace testing_paths {

std::filesystem::path source_dir();
std::filesystem::path fixture(const std::string& relative);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);
void clear_scratch();

// Restores the working directory on scope exit.
class ScopedCwd {
 public:
  explicit ScopedCwd(const std::filesystem::path& dir);
  ~ScopedCwd();
  ScopedCwd(const ScopedCwd&) = delete;
  ScopedCwd& operator=(const ScopedCwd&) = delete;

 private:
  std::filesystem::path old_;
};

}  // namespace testing_paths
