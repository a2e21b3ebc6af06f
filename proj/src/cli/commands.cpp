#include "ctra/cli/commands.hpp"

#include "ctra/agents/pipeline.hpp"
#include "ctra/core/kv_config.hpp"
#include "ctra/data/dataset.hpp"
#include "ctra/data/generator.hpp"
#include "ctra/sql/lint.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

namespace ctra::cli {

EnvLookup system_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

std::string redact(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  for (std::size_t p = text.find(secret); p != std::string::npos; p = text.find(secret, p)) {
    text.replace(p, secret.size(), "[REDACTED]");
  }
  return text;
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// flags > CTRA_* environment > config file > defaults.
class Settings {
 public:
  Settings(std::map<std::string, std::string> flags, EnvLookup env) : flags_(std::move(flags)), env_(std::move(env)) {
    if (auto path = get("config")) {
      try {
        file_ = KeyValueConfig::load(*path);
      } catch (const ConfigError& e) {
        throw UsageError(e.what());
      }
    }
  }

  static std::string env_name(const std::string& key) {
    std::string n = "CTRA_";
    for (char c : key) n += (c == '.' || c == '-') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return n;
  }

  std::optional<std::string> get(const std::string& key) const {
    if (auto it = flags_.find(key); it != flags_.end()) return it->second;
    if (auto v = env_(env_name(key))) return v;
    if (key != "config") return file_.get(key);
    return std::nullopt;
  }

  std::string get_or(const std::string& key, const std::string& fallback) const { return get(key).value_or(fallback); }

  long long get_int(const std::string& key, long long fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      const long long n = std::stoll(*v, &used);
      if (used != v->size()) throw std::invalid_argument(key);
      return n;
    } catch (const std::exception&) {
      throw UsageError(key + ": expected an integer, got '" + *v + "'");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw UsageError(key + ": expected a boolean, got '" + *v + "'");
  }

 private:
  std::map<std::string, std::string> flags_;
  EnvLookup env_;
  KeyValueConfig file_;
};

/// Options shared by `run` and `replay-record`.
struct RunOptions {
  std::map<std::string, std::string> flags;
  bool no_code_check = false;
  bool llm_charts = false;

  void add_to(CLI::App& cmd) {
    auto opt = [&](const std::string& name, const std::string& key, const std::string& help) {
      cmd.add_option_function<std::string>(name, [this, key](const std::string& v) { flags[key] = v; }, help);
    };
    opt("--config", "config", "key = value configuration file");
    opt("--dataset", "dataset", "dataset file (.jsonl or .csv)");
    opt("--output-dir", "output_dir", "directory for report.txt and charts");
    opt("--num-questions", "num_questions", "questions to generate (default 5)");
    opt("--max-retries", "max_retries", "reflection retries per question (default 3)");
    opt("--llm-mode", "llm_mode", "live or replay");
    opt("--replay-file", "replay_file", "JSONL replay file for replay mode");
    opt("--endpoint", "endpoint", "chat-completions base URL for live mode");
    opt("--chart-format", "chart_format", "svg or png");
    opt("--prompt-dir", "prompt_dir", "directory overriding the bundled prompt templates");
    cmd.add_flag_callback("--no-code-check", [this] { flags["code_check"] = "false"; },
                          "skip the model code-check stage");
    cmd.add_flag_callback("--llm-charts", [this] { flags["llm_charts"] = "true"; },
                          "ask the chart model for chart specs");
  }
};

struct Resolved {
  agents::PipelineConfig config;
  std::string llm_mode;
  std::optional<std::string> replay_file;
  std::string endpoint;
  std::string api_key;
  std::optional<std::string> prompt_dir;
};

Resolved resolve(const Settings& s, const EnvLookup& env, bool require_dataset) {
  Resolved r;
  auto& c = r.config;
  if (auto d = s.get("dataset")) {
    c.dataset_path = *d;
  } else if (require_dataset) {
    throw UsageError("--dataset is required");
  }
  c.output_dir = s.get_or("output_dir", "out");
  c.num_questions = static_cast<int>(s.get_int("num_questions", 5));
  c.max_retries = static_cast<int>(s.get_int("max_retries", 3));
  if (c.num_questions < 1) throw UsageError("num_questions must be at least 1");
  if (c.max_retries < 0) throw UsageError("max_retries must be non-negative");
  const std::string fmt = s.get_or("chart_format", "svg");
  if (fmt == "svg") {
    c.chart_format = insights::ImageFormat::svg;
  } else if (fmt == "png") {
    c.chart_format = insights::ImageFormat::png;
  } else {
    throw UsageError("chart_format must be svg or png");
  }
  c.llm_code_check = s.get_bool("code_check", true);
  c.llm_charts = s.get_bool("llm_charts", false);
  c.node_budget = std::chrono::milliseconds(s.get_int("node_budget_ms", 600'000));

  r.llm_mode = s.get_or("llm_mode", "replay");
  if (r.llm_mode != "live" && r.llm_mode != "replay") throw UsageError("llm_mode must be live or replay");
  r.replay_file = s.get("replay_file");
  r.endpoint = s.get_or("endpoint", "");
  r.api_key = env("CTRA_API_KEY").value_or("");
  r.prompt_dir = s.get("prompt_dir");

  const long long timeout_ms = s.get_int("timeout_ms", 120'000);
  c.role_configs = llm::default_role_configs(r.endpoint);
  for (auto& [role, rc] : c.role_configs) {
    const std::string name(llm::role_name(role));
    if (auto m = s.get("model." + name)) rc.model_name = *m;
    if (auto t = s.get("temperature." + name)) {
      try {
        rc.temperature = std::stod(*t);
      } catch (const std::exception&) {
        throw UsageError("temperature." + name + ": expected a number");
      }
    }
    rc.max_tokens = static_cast<int>(s.get_int("max_tokens." + name, rc.max_tokens));
    rc.timeout = std::chrono::milliseconds(timeout_ms);
  }
  return r;
}

std::unique_ptr<llm::ChatBackend> live_backend(const Resolved& r) {
  if (r.endpoint.empty()) throw UsageError("live mode requires --endpoint");
  if (r.api_key.empty()) throw UsageError("live mode requires the CTRA_API_KEY environment variable");
  llm::HttpOptions opts;
  opts.api_key = r.api_key;
  return std::make_unique<llm::HttpChatBackend>(opts);
}

llm::PromptLibrary prompt_library(const Resolved& r) {
  return r.prompt_dir ? llm::PromptLibrary::load(*r.prompt_dir) : llm::PromptLibrary::embedded();
}

void print_summary(const agents::PipelineResult& result, const agents::PipelineConfig& config, std::ostream& out,
                   std::ostream& err) {
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
    const auto& o = result.outcomes[i];
    out << "Q" << (i + 1) << " "
        << (o.status == agents::OutcomeStatus::succeeded ? "succeeded" : "failed") << " attempts=" << o.attempts
        << " " << o.question.text << "\n";
  }
  out << "report: " << (config.output_dir / "report.txt").string() << (result.report.fallback ? " (fallback)" : "")
      << "\n";
  for (const auto& f : result.files) {
    if (f.filename() != "report.txt") out << "chart: " << f.string() << "\n";
  }
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
}

int cmd_run(const RunOptions& o, Io& io) {
  const Settings s(o.flags, io.env);
  const Resolved r = resolve(s, io.env, true);
  std::unique_ptr<llm::ChatBackend> backend;
  if (r.llm_mode == "live") {
    backend = live_backend(r);
  } else {
    if (!r.replay_file) throw UsageError("replay mode requires --replay-file");
    backend = llm::ReplayBackend::load(*r.replay_file);
  }
  llm::Gateway gateway(*backend, r.config.role_configs, prompt_library(r));
  const auto result = agents::run_pipeline(r.config, gateway);
  print_summary(result, r.config, io.out, io.err);
  const bool any = std::any_of(result.outcomes.begin(), result.outcomes.end(), [](const auto& q) {
    return q.status == agents::OutcomeStatus::succeeded;
  });
  return any ? kExitOk : kExitAllFailed;
}

int cmd_replay_record(const RunOptions& o, const std::string& script, const std::string& replay_out, Io& io) {
  const Settings s(o.flags, io.env);
  Resolved r = resolve(s, io.env, true);
  std::unique_ptr<llm::ChatBackend> inner;
  if (!script.empty()) {
    inner = llm::ScriptedBackend::load(script);
  } else {
    inner = live_backend(r);
  }
  llm::RecordingBackend recorder(*inner);
  llm::Gateway gateway(recorder, r.config.role_configs, prompt_library(r));
  const auto result = agents::run_pipeline(r.config, gateway);
  llm::write_replay_file(recorder.entries(), replay_out);
  print_summary(result, r.config, io.out, io.err);
  io.out << "recorded " << recorder.entries().size() << " exchanges to " << replay_out << "\n";
  return kExitOk;
}

int cmd_generate_data(std::uint64_t seed, std::optional<long long> count, const std::string& profile_path,
                      const std::string& output, Io& io) {
  data::GenerationProfile profile = data::default_profile();
  if (!profile_path.empty()) {
    try {
      profile = data::GenerationProfile::from_config(KeyValueConfig::load(profile_path));
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (count) profile = profile.with_record_count(*count);
  const auto records = data::generate_synthetic(seed, profile);
  const auto format = data::format_from_path(output);
  if (format == data::DatasetFormat::jsonl) {
    data::write_jsonl(records, output);
  } else {
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw data::DatasetIoError("cannot write " + output);
    out << data::serialize_csv(records);
    if (!out) throw data::DatasetIoError("write failed: " + output);
  }
  io.out << "wrote " << records.size() << " records to " << output << "\n";
  return kExitOk;
}

int cmd_lint_sql(Io& io) {
  std::ostringstream ss;
  ss << io.in.rdbuf();
  const std::string sql = ss.str();
  if (sql.find_first_not_of(" \t\r\n") == std::string::npos) {
    sql::ValidationReport report;
    report.is_valid = false;
    report.errors.push_back("empty query: no SQL text on standard input");
    report.suggestions.push_back("Provide a single SELECT statement on standard input");
    io.out << report.dump() << "\n";
    return kExitInvalidSql;
  }
  const auto check = sql::check_sql(sql, data::jobs_schema());
  io.out << check.report.dump() << "\n";
  return check.report.is_valid ? kExitOk : kExitInvalidSql;
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, Io io) {
  CLI::App app{"Cycle time reduction agents: question generation, SQL validation and bottleneck reports",
               argv.empty() ? "ctra" : argv[0]};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "run the full pipeline and write report.txt and charts");
  run_opts.add_to(*run);

  RunOptions rec_opts;
  std::string script;
  std::string replay_out;
  auto* rec = app.add_subcommand("replay-record", "run the pipeline and record every model exchange");
  rec_opts.add_to(*rec);
  rec->add_option("--script", script, "scripted responses (JSON object of role -> list) instead of a live endpoint");
  rec->add_option("--replay-out", replay_out, "replay file to write")->required();

  std::uint64_t seed = 1;
  std::optional<long long> count;
  std::string profile_path;
  std::string output = "jobs.jsonl";
  auto* gen = app.add_subcommand("generate-data", "write the synthetic jobs corpus");
  gen->add_option("--seed", seed, "random seed (default 1)");
  gen->add_option("--count", count, "number of records (state mix rescaled)");
  gen->add_option("--profile", profile_path, "generation profile (key = value)");
  gen->add_option("--output,-o", output, "output file (.jsonl or .csv)");

  auto* lint = app.add_subcommand("lint-sql", "validate SQL from standard input; prints a JSON report");

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();
  std::string api_key = io.env("CTRA_API_KEY").value_or("");
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << redact(e.what(), api_key) << "\n";
    if (app.get_subcommands().empty() || std::string(e.what()).find("subcommand") != std::string::npos) {
      io.err << app.help();
    }
    return kExitFatal;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts, io);
    if (rec->parsed()) return cmd_replay_record(rec_opts, script, replay_out, io);
    if (gen->parsed()) {
      if (count && *count < 0) throw UsageError("--count must be non-negative");
      return cmd_generate_data(seed, count, profile_path, output, io);
    }
    if (lint->parsed()) return cmd_lint_sql(io);
  } catch (const UsageError& e) {
    io.err << "error: " << redact(e.what(), api_key) << "\n";
  } catch (const agents::PipelineError& e) {
    io.err << "fatal: " << redact(e.what(), api_key) << "\n";
  } catch (const llm::LlmError& e) {
    io.err << "fatal: " << redact(e.what(), api_key) << "\n";
  } catch (const data::DatasetIoError& e) {
    io.err << "io error: " << redact(e.what(), api_key) << "\n";
  } catch (const data::InvalidProfile& e) {
    io.err << "invalid profile: " << redact(e.what(), api_key) << "\n";
  } catch (const std::exception& e) {
    io.err << "fatal: " << redact(e.what(), api_key) << "\n";
  }
  return kExitFatal;
}

}  // namespace ctra::cli
