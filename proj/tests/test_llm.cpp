#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <mutex>

#include <nlohmann/json.hpp>

#include "mtpe/error.hpp"
#include "mtpe/feedback.hpp"
#include "mtpe/llm_gateway.hpp"
#include "mtpe/mock_server.hpp"
#include "synth.hpp"

using namespace mtpe;
using namespace mtpe::llm;

namespace {

const LangPair kEnDe = LangPair::from_code("en-de");

GenerationConfig fast_config() {
  GenerationConfig cfg;
  cfg.backoff_initial_ms = 1;
  cfg.max_retries = 2;
  cfg.max_in_flight = 4;
  return cfg;
}

// Answers "out:<prompt>" after failing a prompt-specific number of times.
class FakeClient : public CompletionClient {
 public:
  std::map<std::string, std::vector<int>> failures;  // prompt -> statuses to return first
  std::atomic<int> calls{0};
  std::atomic<int> concurrent{0};
  std::atomic<int> peak{0};

  CompletionResult complete(const std::string& prompt) override {
    ++calls;
    int now = ++concurrent;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    CompletionResult r;
    {
      std::lock_guard lock(mu_);
      auto it = failures.find(prompt);
      if (it != failures.end() && !it->second.empty()) {
        r.status = it->second.front();
        r.error = "fail";
        it->second.erase(it->second.begin());
        --concurrent;
        return r;
      }
    }
    r.status = 200;
    r.text = "out:" + prompt;
    --concurrent;
    return r;
  }

 private:
  std::mutex mu_;
};

std::vector<BatchItem> items(int n) {
  std::vector<BatchItem> out;
  for (int i = 0; i < n; ++i) out.push_back({"s" + std::to_string(i), kEnDe, "p" + std::to_string(i), "generic", 0});
  return out;
}

}  // namespace

TEST(Extract, StripsCueAndCommentary) {
  EXPECT_EQ(extract_hypothesis("Improved German: Neue Dinge.", kEnDe), "Neue Dinge.");
  EXPECT_EQ(extract_hypothesis("  Neue Dinge.\n\nThe changes were...", kEnDe), "Neue Dinge.");
  EXPECT_EQ(extract_hypothesis("Neue Dinge.\nExplanation: fixed the verb.", kEnDe), "Neue Dinge.");
  EXPECT_EQ(extract_hypothesis("\"Neue Dinge.\"", kEnDe), "Neue Dinge.");
  EXPECT_EQ(extract_hypothesis("German: Neue Dinge.\n### English: x", kEnDe), "Neue Dinge.");
  EXPECT_EQ(extract_hypothesis("improved german: Neue Dinge.", kEnDe), "Neue Dinge.");
  EXPECT_EQ(extract_hypothesis("Ziel: 3 Dinge.", kEnDe), "Ziel: 3 Dinge.");
  EXPECT_EQ(extract_hypothesis("   \n", kEnDe), std::nullopt);
  EXPECT_EQ(extract_hypothesis("Improved German:", kEnDe), std::nullopt);
}

TEST(Records, JsonRoundTrip) {
  PostEditRecord r;
  r.segment_id = "a/b/1";
  r.feedback = "generic";
  r.k = 10;
  r.prompt = "P";
  r.raw_output = "R";
  r.extracted = "R";
  r.attempts = 2;
  r.latency_ms = 12.5;
  std::vector<PostEditRecord> v{r};
  auto back = records_from_jsonl(records_to_jsonl(v));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].segment_id, r.segment_id);
  EXPECT_EQ(back[0].extracted, r.extracted);
  EXPECT_EQ(back[0].k, 10u);
  EXPECT_EQ(records_to_jsonl(v).find("latency"), std::string::npos);
  EXPECT_NE(timings_to_jsonl(v).find("\"attempts\":2"), std::string::npos);
}

TEST(Config, Validation) {
  GenerationConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.endpoint = "localhost:8000";
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = GenerationConfig{};
  cfg.max_in_flight = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = GenerationConfig{};
  cfg.api_key = "secret";
  EXPECT_EQ(cfg.to_json().dump().find("secret"), std::string::npos);
}

TEST(Client, RequestBodyShapes) {
  GenerationConfig cfg;
  cfg.seed = 3;
  nlohmann::json b = OpenAiClient(cfg).request_body("hi");
  EXPECT_EQ(b["prompt"], "hi");
  EXPECT_EQ(b["temperature"], 0.0);
  EXPECT_EQ(b["seed"], 3);
  cfg.api_style = ApiStyle::Chat;
  b = OpenAiClient(cfg).request_body("hi");
  EXPECT_EQ(b["messages"][0]["content"], "hi");
  EXPECT_FALSE(b.contains("prompt"));
}

TEST(Client, ParseResponse) {
  EXPECT_EQ(OpenAiClient::parse_response(R"({"choices":[{"text":"x"}]})", ApiStyle::Completion), "x");
  EXPECT_EQ(OpenAiClient::parse_response(R"({"choices":[{"message":{"content":"y"}}]})", ApiStyle::Chat),
            "y");
  EXPECT_THROW(OpenAiClient::parse_response("nope", ApiStyle::Completion), Error);
  EXPECT_THROW(OpenAiClient::parse_response(R"({"choices":[]})", ApiStyle::Completion), Error);
}

TEST(Batch, PreservesOrderAndBoundsConcurrency) {
  FakeClient client;
  auto cfg = fast_config();
  cfg.max_in_flight = 3;
  auto its = items(40);
  auto recs = postedit_batch(its, client, cfg);
  ASSERT_EQ(recs.size(), 40u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(recs[i].segment_id, its[i].segment_id);
    EXPECT_EQ(recs[i].extracted, "out:" + its[i].prompt);
    EXPECT_FALSE(recs[i].failed);
  }
  EXPECT_LE(client.peak.load(), 3);
}

TEST(Batch, RetriesTransientFailures) {
  FakeClient client;
  client.failures["p1"] = {500, 429};
  client.failures["p2"] = {0, 503, 502};
  client.failures["p3"] = {408};
  auto recs = postedit_batch(items(5), client, fast_config());
  EXPECT_FALSE(recs[1].failed);
  EXPECT_EQ(recs[1].attempts, 3);
  EXPECT_TRUE(recs[2].failed);
  EXPECT_FALSE(recs[2].extracted);
  EXPECT_EQ(recs[2].attempts, 3);
  EXPECT_FALSE(recs[3].failed);
  EXPECT_EQ(recs[0].attempts, 1);
}

TEST(Batch, AbortsOnClientErrors) {
  FakeClient client;
  client.failures["p0"] = {401};
  try {
    postedit_batch(items(3), client, fast_config());
    FAIL() << "expected BatchAborted";
  } catch (const BatchAborted& e) {
    EXPECT_EQ(e.status(), 401);
  }
}

TEST(MockServer, RespondModes) {
  Corpus c = parse_mqm_tsv_text(synth::mqm_tsv(5, 1).tsv, kEnDe);
  const Segment& s = c.segments()[3];
  const std::string prompt = build_postedit_prompt(s, FeedbackSpec::generic(), {}, 0, 0);
  EXPECT_EQ(MockServer(c, {.mode = MockMode::Identity}).respond(prompt), s.hypothesis);
  EXPECT_EQ(MockServer(c, {.mode = MockMode::EchoReference}).respond(prompt), *s.reference);
  MockOptions scripted{.mode = MockMode::Scripted};
  scripted.scripted[s.id] = "scripted!";
  EXPECT_EQ(MockServer(c, scripted).respond(prompt), "scripted!");
  EXPECT_EQ(MockServer(c, {.mode = MockMode::Identity}).respond("unrelated"), "");
  MockOptions cue{.mode = MockMode::Identity, .prefix_cue = true};
  EXPECT_EQ(MockServer(c, cue).respond(prompt), "Improved German: " + s.hypothesis);
}

TEST(MockServer, SharedSourceUsesHypothesis) {
  Corpus c;
  for (int i = 0; i < 3; ++i) {
    Segment s;
    s.id = "sys" + std::to_string(i) + "/d/1";
    s.lang = kEnDe;
    s.source = "Same source.";
    s.hypothesis = "Hypothese " + std::to_string(i) + ".";
    c.add(s);
  }
  MockServer m(c, {.mode = MockMode::Identity});
  for (const auto& s : c)
    EXPECT_EQ(m.respond(build_postedit_prompt(s, FeedbackSpec::generic(), {}, 0, 0)), s.hypothesis);
}

TEST(MockServer, HttpRoundTrip) {
  Corpus c = parse_mqm_tsv_text(synth::mqm_tsv(20, 4).tsv, kEnDe);
  MockServer server(c, {.mode = MockMode::EchoReference, .fail_first = 2, .append_explanation = true});
  server.start();
  auto cfg = fast_config();
  cfg.endpoint = server.endpoint();
  for (ApiStyle style : {ApiStyle::Completion, ApiStyle::Chat}) {
    cfg.api_style = style;
    OpenAiClient client(cfg);
    std::vector<BatchItem> batch;
    for (const auto& s : c)
      batch.push_back({s.id, s.lang, build_postedit_prompt(s, FeedbackSpec::generic(), {}, 0, 0), "generic", 0});
    auto recs = postedit_batch(batch, client, cfg);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      EXPECT_FALSE(recs[i].failed) << recs[i].error;
      EXPECT_EQ(recs[i].extracted, c.segments()[i].reference);
    }
  }
  EXPECT_EQ(server.requests_served(), 42u);
  server.stop();
}

TEST(MockServer, ForcedStatusAbortsBatch) {
  Corpus c = parse_mqm_tsv_text(synth::mqm_tsv(3, 4).tsv, kEnDe);
  MockServer server(c, {.forced_status = 403});
  server.start();
  auto cfg = fast_config();
  cfg.endpoint = server.endpoint();
  OpenAiClient client(cfg);
  std::vector<BatchItem> batch{{"x", kEnDe, "prompt", "generic", 0}};
  EXPECT_THROW(postedit_batch(batch, client, cfg), BatchAborted);
}

TEST(MockServer, UnreachableEndpointFails) {
  auto cfg = fast_config();
  cfg.endpoint = "http://127.0.0.1:1/v1";
  cfg.timeout_seconds = 1;
  cfg.max_retries = 1;
  OpenAiClient client(cfg);
  std::vector<BatchItem> batch{{"x", kEnDe, "prompt", "generic", 0}};
  auto recs = postedit_batch(batch, client, cfg);
  EXPECT_TRUE(recs[0].failed);
  EXPECT_EQ(recs[0].attempts, 2);
}
