#include "ctra/core/hash.hpp"
#include "ctra/llm/backend.hpp"
#include "ctra/llm/extract.hpp"
#include "ctra/llm/gateway.hpp"
#include "ctra/llm/prompts.hpp"
#include "test_paths.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <fstream>
#include <thread>

using namespace ctra;
using namespace ctra::llm;

namespace {

PromptContext base_context() {
  PromptContext ctx;
  ctx.table_schema = data::jobs_schema().to_prompt_text();
  ctx.output_dir = "out";
  return ctx;
}

std::string extract_kind_name(ExtractError::Kind k) {
  switch (k) {
    case ExtractError::Kind::no_json_found: return "no_json_found";
    case ExtractError::Kind::wrong_shape: return "wrong_shape";
    case ExtractError::Kind::no_select_found: return "no_select_found";
  }
  return "?";
}

// Local OpenAI-style stub on an ephemeral port.
class StubServer {
 public:
  explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      handler(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::atomic<int> hits{0};
  std::string last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RoleModelConfig config_for(const std::string& endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(5)) {
  auto c = default_role_config(Role::query_builder, endpoint);
  c.timeout = timeout;
  return c;
}

}  // namespace

TEST(Roles, NamesRoundTrip) {
  for (Role r : kAllRoles) EXPECT_EQ(role_from_name(role_name(r)), r);
  EXPECT_FALSE(role_from_name("planner"));
}

TEST(Roles, Defaults) {
  const auto c = default_role_config(Role::report);
  EXPECT_DOUBLE_EQ(c.temperature, 0.7);
  EXPECT_EQ(c.max_tokens, 4000);
  EXPECT_EQ(c.model_name, "meta-llama/Llama-3.1-405B-Instruct");
  EXPECT_EQ(default_role_config(Role::query_builder).model_name, "deepseek-ai/DeepSeek-R1");
  EXPECT_EQ(default_role_config(Role::chart).model_name, "meta-llama/Llama-3.1-70B-Instruct");
  EXPECT_EQ(default_role_configs().size(), kAllRoles.size());
}

TEST(Prompts, QuestionCount) {
  auto ctx = base_context();
  ctx.num_questions = 5;
  const auto text = render_prompt(Role::question_creation, ctx);
  EXPECT_NE(text.find("Generate exactly 5 human-language questions"), std::string::npos);
  EXPECT_EQ(text.find("{num_questions}"), std::string::npos);
}

TEST(Prompts, ReflectWithoutErrorsIsMissingPlaceholder) {
  auto ctx = base_context();
  ctx.question = "q";
  ctx.code = "SELECT 1";
  try {
    render_prompt(Role::reflect, ctx);
    FAIL();
  } catch (const MissingPlaceholder& e) {
    EXPECT_EQ(e.name(), "errors");
    EXPECT_EQ(e.role(), "reflect");
  }
}

TEST(Prompts, ReportPlotReference) {
  auto ctx = base_context();
  ctx.queries_results = "Query 1: ...";
  const auto text = render_prompt(Role::report, ctx);
  EXPECT_NE(text.find("out/plot_query_X.png"), std::string::npos);
  ctx.plot_extension = "svg";
  EXPECT_NE(render_prompt(Role::report, ctx).find("out/plot_query_X.svg"), std::string::npos);
}

TEST(Prompts, EveryRoleRendersWithFullContext) {
  auto ctx = base_context();
  ctx.num_questions = 3;
  ctx.question = "How do job counts compare across lab_id values? (Suitable for bar chart)";
  ctx.code = "SELECT lab_id, COUNT(*) AS n FROM jobs GROUP BY lab_id";
  ctx.errors = "none";
  ctx.queries_results = "r";
  ctx.data = "lab_id | n";
  ctx.plot_filename = "out/plot_query_1.svg";
  for (Role r : kAllRoles) {
    const auto text = render_prompt(r, ctx);
    EXPECT_FALSE(text.empty());
    EXPECT_EQ(text.find("{table_schema}"), std::string::npos) << role_name(r);
    EXPECT_EQ(render_prompt(r, ctx), text);
  }
}

TEST(Prompts, SubstituteSinglePass) {
  auto ctx = base_context();
  ctx.question = "{code} stays literal";
  EXPECT_EQ(substitute("Q: {question} {not_a_field} {", ctx, "t"), "Q: {code} stays literal {not_a_field} {");
}

TEST(Prompts, RetryFeedbackBlock) {
  auto ctx = base_context();
  ctx.attempt = 2;
  ctx.max_attempts = 4;
  ctx.code = "SELECT status FROM jobs";
  ctx.errors = "column 'status' does not exist";
  ctx.reflection = "Use state.";
  const auto text = PromptLibrary::embedded().render_retry_feedback(ctx);
  EXPECT_NE(text.find("Attempt 2 of 4"), std::string::npos);
  EXPECT_NE(text.find("Use state."), std::string::npos);
}

TEST(Prompts, DirectoryOverride) {
  const auto dir = testing_paths::scratch_dir("prompt-override");
  std::ofstream(dir / "reflect.txt") << "Fix {code} given {errors}";
  const auto lib = PromptLibrary::load(dir);
  auto ctx = base_context();
  ctx.code = "SELECT 1";
  ctx.errors = "e";
  EXPECT_EQ(lib.render(Role::reflect, ctx), "Fix SELECT 1 given e");
  EXPECT_EQ(lib.text("generate_sql"), PromptLibrary::embedded().text("generate_sql"));
}

TEST(Extract, TranscriptFixtures) {
  std::ifstream in(testing_paths::fixture("llm/transcripts.json"));
  const auto cases = nlohmann::json::parse(in);
  ASSERT_GE(cases.size(), 15u);
  for (const auto& c : cases) {
    const std::string raw = c.at("raw");
    const std::string kind = c.at("kind");
    SCOPED_TRACE(c.at("name").get<std::string>());
    try {
      if (kind == "array") {
        const auto got = extract_json_array(raw);
        ASSERT_FALSE(c.contains("error"));
        EXPECT_EQ(nlohmann::json(got), c.at("expect"));
      } else if (kind == "object") {
        const auto got = extract_json_object(raw);
        ASSERT_FALSE(c.contains("error"));
        EXPECT_EQ(got.is_valid, c.at("expect").at("is_valid").get<bool>());
        EXPECT_EQ(nlohmann::json(got.errors), c.at("expect").at("errors"));
        EXPECT_EQ(nlohmann::json(got.suggestions), c.at("expect").at("suggestions"));
      } else {
        const auto got = extract_sql(raw);
        ASSERT_FALSE(c.contains("error")) << got;
        EXPECT_EQ(got, c.at("expect").get<std::string>());
      }
    } catch (const ExtractError& e) {
      ASSERT_TRUE(c.contains("error")) << e.what();
      EXPECT_EQ(extract_kind_name(e.kind()), c.at("error").get<std::string>());
    }
  }
}

TEST(Extract, SqlIsIdempotent) {
  std::ifstream in(testing_paths::fixture("llm/transcripts.json"));
  for (const auto& c : nlohmann::json::parse(in)) {
    if (c.at("kind") != "sql" || c.contains("error")) continue;
    const auto once = extract_sql(c.at("raw").get<std::string>());
    EXPECT_EQ(extract_sql(once), once);
  }
}

TEST(Extract, StripThink) {
  EXPECT_EQ(strip_think("<think>a</think>b<think>c</think>d"), "bd");
  EXPECT_EQ(strip_think("no tags"), "no tags");
}

TEST(Replay, RecordedExchangeIsByteIdentical) {
  const std::string prompt = "prompt text";
  const std::string response = "  exact\nresponse with \"quotes\" \xE2\x9C\x93 ";
  ReplayBackend backend({{Role::query_builder, sha256_hex(prompt), response}});
  EXPECT_EQ(backend.complete(default_role_config(Role::query_builder), prompt), response);
}

TEST(Replay, UnknownPromptIsMiss) {
  ReplayBackend backend({});
  try {
    backend.complete(default_role_config(Role::reflect), "never recorded");
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmError::Kind::replay_miss);
    EXPECT_EQ(e.prompt_hash, sha256_hex("never recorded"));
  }
}

TEST(Replay, DuplicatesServedInOrderLastRepeats) {
  const auto h = sha256_hex("p");
  ReplayBackend backend({{Role::query_builder, h, "one"}, {Role::query_builder, h, "two"}});
  const auto cfg = default_role_config(Role::query_builder);
  EXPECT_EQ(backend.complete(cfg, "p"), "one");
  EXPECT_EQ(backend.complete(cfg, "p"), "two");
  EXPECT_EQ(backend.complete(cfg, "p"), "two");
}

TEST(Replay, FileRoundTrip) {
  const auto dir = testing_paths::scratch_dir("replay-file");
  std::vector<ReplayEntry> entries = {{Role::question_creation, sha256_hex("a"), "[\"q\"]"},
                                      {Role::report, sha256_hex("b"), "multi\nline"}};
  write_replay_file(entries, dir / "r.jsonl");
  const auto back = read_replay_file(dir / "r.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].role, Role::report);
  EXPECT_EQ(back[1].response, "multi\nline");
  EXPECT_EQ(back[0].prompt_sha256, sha256_hex("a"));
}

TEST(Replay, BundledFixtureParses) {
  const auto entries = read_replay_file(testing_paths::fixture("replay/bundled.jsonl"));
  EXPECT_GE(entries.size(), 10u);
  for (const auto& e : entries) EXPECT_EQ(e.prompt_sha256.size(), 64u);
}

TEST(Scripted, QueuesPerRoleAndFailures) {
  ScriptedBackend b({{Role::query_builder, {ScriptStep::reply("a"), ScriptStep::fail(LlmError::Kind::timeout),
                                            ScriptStep::reply("c")}}});
  const auto cfg = default_role_config(Role::query_builder);
  EXPECT_EQ(b.complete(cfg, "x"), "a");
  try {
    b.complete(cfg, "x");
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmError::Kind::timeout);
  }
  EXPECT_EQ(b.complete(cfg, "x"), "c");
  EXPECT_EQ(b.complete(cfg, "x"), "c");
  EXPECT_EQ(b.calls(Role::query_builder), 4u);
  EXPECT_THROW(b.complete(default_role_config(Role::report), "x"), LlmError);
}

TEST(Scripted, LoadsJsonScript) {
  const auto b = ScriptedBackend::load(testing_paths::fixture("replay/bundled_script.json"));
  const auto text = b->complete(default_role_config(Role::question_creation), "anything");
  EXPECT_EQ(extract_json_array(text).size(), 5u);
}

TEST(Recording, KeepsOnlySuccessfulExchanges) {
  ScriptedBackend inner({{Role::reflect, {ScriptStep::reply("ok"), ScriptStep::fail(LlmError::Kind::transport)}}});
  RecordingBackend rec(inner);
  const auto cfg = default_role_config(Role::reflect);
  EXPECT_EQ(rec.complete(cfg, "p1"), "ok");
  EXPECT_THROW(rec.complete(cfg, "p2"), LlmError);
  const auto e = rec.entries();
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].prompt_sha256, sha256_hex("p1"));
  ReplayBackend replay(e);
  EXPECT_EQ(replay.complete(cfg, "p1"), "ok");
}

TEST(Gateway, TranscriptRecordsCallsAndErrors) {
  ScriptedBackend b({{Role::code_check, {ScriptStep::reply("{}")}}});
  Gateway g(b, {});
  EXPECT_EQ(g.complete(Role::code_check, "check"), "{}");
  EXPECT_THROW(g.complete(Role::report, "report"), LlmError);
  const auto t = g.transcript();
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].rendered_prompt, "check");
  EXPECT_TRUE(t[0].error.empty());
  EXPECT_EQ(t[1].role, Role::report);
  EXPECT_FALSE(t[1].error.empty());
  EXPECT_EQ(g.config(Role::report).model_name, default_role_config(Role::report).model_name);
}

TEST(Http, SendsChatCompletionRequest) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"SELECT 1"}}]})", "application/json");
  });
  HttpChatBackend backend({"sk-test", 0, std::chrono::milliseconds(1), std::chrono::milliseconds(10)});
  EXPECT_EQ(backend.complete(config_for(stub.endpoint()), "hello"), "SELECT 1");
  const auto body = nlohmann::json::parse(stub.last_body);
  EXPECT_EQ(body.at("model"), "deepseek-ai/DeepSeek-R1");
  EXPECT_EQ(body.at("messages").size(), 1u);
  EXPECT_EQ(body.at("messages")[0].at("role"), "user");
  EXPECT_EQ(body.at("messages")[0].at("content"), "hello");
  EXPECT_EQ(body.at("max_tokens"), 4000);
  EXPECT_EQ(stub.last_auth, "Bearer sk-test");
}

TEST(Http, RateLimitSurfacesRetryAfter) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.status = 429;
    res.set_header("Retry-After", "1");
    res.set_content(R"({"error":"rate limited"})", "application/json");
  });
  HttpChatBackend backend({"", 1, std::chrono::milliseconds(1), std::chrono::milliseconds(20)});
  try {
    backend.complete(config_for(stub.endpoint()), "hello");
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmError::Kind::transport);
    EXPECT_EQ(e.http_status, 429);
    ASSERT_TRUE(e.retry_after);
    EXPECT_DOUBLE_EQ(*e.retry_after, 1.0);
  }
  EXPECT_EQ(stub.hits.load(), 2);
}

TEST(Http, ServerErrorThenSuccessRetries) {
  std::atomic<int> n{0};
  StubServer stub([&n](const httplib::Request&, httplib::Response& res) {
    if (n++ == 0) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
  });
  HttpChatBackend backend({"", 1, std::chrono::milliseconds(1), std::chrono::milliseconds(10)});
  EXPECT_EQ(backend.complete(config_for(stub.endpoint()), "x"), "ok");
}

TEST(Http, MalformedBodyIsBadResponse) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
  HttpChatBackend backend({"", 0, std::chrono::milliseconds(1), std::chrono::milliseconds(10)});
  try {
    backend.complete(config_for(stub.endpoint()), "x");
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmError::Kind::bad_response);
  }
}

TEST(Http, SlowServerTimesOut) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(R"({"choices":[{"message":{"content":"late"}}]})", "application/json");
  });
  HttpChatBackend backend({"", 0, std::chrono::milliseconds(1), std::chrono::milliseconds(10)});
  try {
    backend.complete(config_for(stub.endpoint(), std::chrono::milliseconds(150)), "x");
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmError::Kind::timeout);
  }
}

TEST(Http, UnreachableIsTransport) {
  HttpChatBackend backend({"", 0, std::chrono::milliseconds(1), std::chrono::milliseconds(10)});
  try {
    backend.complete(config_for("http://127.0.0.1:1/v1", std::chrono::milliseconds(300)), "x");
    FAIL();
  } catch (const LlmError& e) {
    EXPECT_TRUE(e.kind() == LlmError::Kind::transport || e.kind() == LlmError::Kind::timeout);
  }
}
