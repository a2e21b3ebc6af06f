#include "ctra/cli/commands.hpp"
#include "ctra/data/dataset.hpp"
#include "test_paths.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <sstream>

using namespace ctra;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args, const std::string& stdin_text = "",
               std::map<std::string, std::string> env = {}) {
  args.insert(args.begin(), "ctra");
  std::istringstream in(stdin_text);
  std::ostringstream out;
  std::ostringstream err;
  cli::Io io{in, out, err, [env](const std::string& k) -> std::optional<std::string> {
               auto it = env.find(k);
               if (it == env.end()) return std::nullopt;
               return it->second;
             }};
  Outcome o;
  o.code = cli::run_cli(args, io);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const fs::path& seed1_corpus() {
  static const fs::path path = [] {
    const auto dir = testing_paths::scratch_dir("cli-corpus");
    const auto p = dir / "jobs.jsonl";
    const auto o = invoke({"generate-data", "--seed", "1", "--output", p.string()});
    if (o.code != 0) throw std::runtime_error(o.err);
    return p;
  }();
  return path;
}

std::size_t question_lines(const std::string& out) {
  std::size_t n = 0;
  std::istringstream in(out);
  for (std::string line; std::getline(in, line);) n += line.rfind("Q", 0) == 0;
  return n;
}

}  // namespace

TEST(LintSql, ValidQueryExitsZero) {
  const auto o = invoke({"lint-sql"}, "SELECT state, COUNT(*) AS n FROM jobs GROUP BY state");
  EXPECT_EQ(o.code, cli::kExitOk);
  EXPECT_TRUE(nlohmann::json::parse(o.out).at("is_valid").get<bool>());
}

TEST(LintSql, InvalidQueryExitsThree) {
  const auto o = invoke({"lint-sql"}, "SELECT status, COUNT(*) AS n FROM jobs GROUP BY status");
  EXPECT_EQ(o.code, cli::kExitInvalidSql);
  const auto j = nlohmann::json::parse(o.out);
  EXPECT_FALSE(j.at("is_valid").get<bool>());
  EXPECT_FALSE(j.at("errors").empty());
}

TEST(LintSql, EmptyInputExitsThree) {
  EXPECT_EQ(invoke({"lint-sql"}, "  \n\t").code, cli::kExitInvalidSql);
  EXPECT_EQ(invoke({"lint-sql"}, "SELECT FROM").code, cli::kExitInvalidSql);
}

TEST(Usage, ErrorsExitOne) {
  EXPECT_EQ(invoke({}).code, cli::kExitFatal);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kExitFatal);
  EXPECT_EQ(invoke({"run"}).code, cli::kExitFatal);
  EXPECT_EQ(invoke({"run", "--dataset", "x.jsonl", "--llm-mode", "sometimes"}).code, cli::kExitFatal);
  EXPECT_EQ(invoke({"generate-data", "--seed", "abc"}).code, cli::kExitFatal);
  EXPECT_EQ(invoke({"--help"}).code, cli::kExitOk);
}

TEST(Usage, MissingReplayFileIsFatal) {
  const auto o = invoke({"run", "--dataset", seed1_corpus().string(), "--replay-file", "/nonexistent/r.jsonl"});
  EXPECT_EQ(o.code, cli::kExitFatal);
  EXPECT_FALSE(o.err.empty());
}

TEST(Usage, LiveModeNeedsKeyAndEndpoint) {
  const auto dir = testing_paths::scratch_dir("cli-live");
  const auto o = invoke({"run", "--dataset", seed1_corpus().string(), "--llm-mode", "live", "--endpoint",
                         "http://127.0.0.1:1/v1", "--output-dir", (dir / "out").string()});
  EXPECT_EQ(o.code, cli::kExitFatal);
  EXPECT_NE(o.err.find("CTRA_API_KEY"), std::string::npos);
}

TEST(Redaction, KeyNeverPrinted) {
  EXPECT_EQ(cli::redact("token sk-abc and sk-abc", "sk-abc"), "token [REDACTED] and [REDACTED]");
  EXPECT_EQ(cli::redact("nothing", ""), "nothing");
  const std::string key = "sk-very-secret-123";
  const auto dir = testing_paths::scratch_dir("cli-redact");
  const auto o = invoke({"run", "--dataset", seed1_corpus().string(), "--llm-mode", "live", "--endpoint",
                         "http://127.0.0.1:1/v1?k=" + key, "--output-dir", (dir / "out").string()},
                        "", {{"CTRA_API_KEY", key}, {"CTRA_TIMEOUT_MS", "300"}});
  EXPECT_EQ(o.code, cli::kExitFatal);
  EXPECT_EQ(o.out.find(key), std::string::npos);
  EXPECT_EQ(o.err.find(key), std::string::npos) << o.err;
}

TEST(GenerateData, SameSeedSameFile) {
  const auto dir = testing_paths::scratch_dir("cli-gen");
  ASSERT_EQ(invoke({"generate-data", "--seed", "3", "--count", "300", "-o", (dir / "a.jsonl").string()}).code, 0);
  ASSERT_EQ(invoke({"generate-data", "--seed", "3", "--count", "300", "-o", (dir / "b.jsonl").string()}).code, 0);
  ASSERT_EQ(invoke({"generate-data", "--seed", "3", "--count", "300", "-o", (dir / "c.csv").string()}).code, 0);
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
  EXPECT_EQ(data::load_dataset(dir / "c.csv", data::DatasetFormat::csv).size(), 300u);
  EXPECT_EQ(invoke({"generate-data", "--count", "-4", "-o", (dir / "d.jsonl").string()}).code, cli::kExitFatal);
}

TEST(GenerateData, BadProfileIsFatal) {
  const auto dir = testing_paths::scratch_dir("cli-profile");
  std::ofstream(dir / "p.conf") << "hot_error_share = 7\n";
  EXPECT_EQ(invoke({"generate-data", "--profile", (dir / "p.conf").string(), "-o", (dir / "x.jsonl").string()}).code,
            cli::kExitFatal);
}

TEST(Run, BundledReplaySucceeds) {
  testing_paths::ScopedCwd cwd(testing_paths::scratch_dir("cli-run"));
  const auto o = invoke({"run", "--dataset", seed1_corpus().string(), "--output-dir", "out", "--llm-mode", "replay",
                         "--replay-file", testing_paths::fixture("replay/bundled.jsonl").string()});
  EXPECT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_EQ(question_lines(o.out), 5u);
  EXPECT_TRUE(fs::exists("out/report.txt"));
}

TEST(Run, AllFailedExitsTwo) {
  testing_paths::ScopedCwd cwd(testing_paths::scratch_dir("cli-adversarial"));
  const auto o = invoke({"run", "--dataset", seed1_corpus().string(), "--output-dir", "out", "--replay-file",
                         testing_paths::fixture("replay/adversarial.jsonl").string()});
  EXPECT_EQ(o.code, cli::kExitAllFailed) << o.err;
  EXPECT_NE(o.out.find("(fallback)"), std::string::npos);
}

TEST(Settings, FlagBeatsEnvBeatsFileBeatsDefault) {
  const auto dir = testing_paths::scratch_dir("cli-precedence");
  testing_paths::ScopedCwd cwd(dir);
  std::ofstream("ctra.conf") << "output_dir = from_file\nnum_questions = 2\nmax_retries = 0\n";
  const std::string script = testing_paths::fixture("replay/bundled_script.json").string();
  auto record = [&](std::vector<std::string> extra, std::map<std::string, std::string> env) {
    std::vector<std::string> args = {"replay-record", "--script",   script,
                                     "--dataset",     seed1_corpus().string(), "--replay-out", "r.jsonl"};
    args.insert(args.end(), extra.begin(), extra.end());
    return invoke(args, "", env);
  };

  auto o = record({}, {});
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_EQ(question_lines(o.out), 5u);
  EXPECT_TRUE(fs::exists("out/report.txt"));

  o = record({"--config", "ctra.conf"}, {});
  EXPECT_EQ(question_lines(o.out), 2u);
  EXPECT_TRUE(fs::exists("from_file/report.txt"));

  o = record({"--config", "ctra.conf"}, {{"CTRA_OUTPUT_DIR", "from_env"}, {"CTRA_NUM_QUESTIONS", "3"}});
  EXPECT_EQ(question_lines(o.out), 3u);
  EXPECT_TRUE(fs::exists("from_env/report.txt"));

  o = record({"--config", "ctra.conf", "--output-dir", "from_flag", "--num-questions", "4"},
             {{"CTRA_OUTPUT_DIR", "from_env"}, {"CTRA_NUM_QUESTIONS", "3"}});
  EXPECT_EQ(question_lines(o.out), 4u);
  EXPECT_TRUE(fs::exists("from_flag/report.txt"));

  o = record({}, {{"CTRA_CONFIG", "ctra.conf"}});
  EXPECT_EQ(question_lines(o.out), 2u);
}

TEST(Settings, BadValuesAreUsageErrors) {
  const auto corpus = seed1_corpus().string();
  EXPECT_EQ(invoke({"run", "--dataset", corpus, "--num-questions", "0"}).code, cli::kExitFatal);
  EXPECT_EQ(invoke({"run", "--dataset", corpus, "--max-retries", "two"}).code, cli::kExitFatal);
  EXPECT_EQ(invoke({"run", "--dataset", corpus, "--chart-format", "gif"}).code, cli::kExitFatal);
  EXPECT_EQ(invoke({"run", "--dataset", corpus, "--config", "/nonexistent.conf"}).code, cli::kExitFatal);
}

// Re-recording with the bundled scripts must reproduce the committed replay files.
TEST(ReplayFixtures, NoDrift) {
  for (const std::string name : {"bundled", "adversarial"}) {
    testing_paths::ScopedCwd cwd(testing_paths::scratch_dir("cli-drift-" + name));
    const auto o = invoke({"replay-record", "--script",
                          testing_paths::fixture("replay/" + name + "_script.json").string(), "--dataset",
                          seed1_corpus().string(), "--output-dir", "out", "--replay-out", "fresh.jsonl"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(slurp("fresh.jsonl"), slurp(testing_paths::fixture("replay/" + name + ".jsonl"))) << name;
  }
}
