#include "mtpe/llm_gateway.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "mtpe/jsonl.hpp"
#include "mtpe/text.hpp"

namespace mtpe::llm {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ApiStyle s) { return s == ApiStyle::Chat ? "chat" : "completion"; }

ApiStyle parse_api_style(std::string_view label) {
  std::string lower = text::to_lower(text::trim(label));
  if (lower == "chat") return ApiStyle::Chat;
  if (lower == "completion" || lower == "completions") return ApiStyle::Completion;
  throw ConfigError("unknown api style '" + std::string(label) + "'");
}

void GenerationConfig::validate() const {
  if (endpoint.empty()) throw ConfigError("endpoint is empty");
  if (!text::starts_with(endpoint, "http://") && !text::starts_with(endpoint, "https://"))
    throw ConfigError("endpoint must start with http:// or https://: " + endpoint);
  if (model.empty()) throw ConfigError("model name is empty");
  if (max_in_flight < 1) throw ConfigError("max in-flight requests must be at least 1");
  if (max_retries < 0) throw ConfigError("max retries must be non-negative");
  if (max_tokens < 1) throw ConfigError("max tokens must be positive");
  if (timeout_seconds <= 0) throw ConfigError("timeout must be positive");
  if (temperature < 0) throw ConfigError("temperature must be non-negative");
  if (backoff_initial_ms < 0 || backoff_factor < 1.0) throw ConfigError("invalid backoff settings");
}

json GenerationConfig::to_json() const {
  ordered_json j;
  j["endpoint"] = endpoint;
  j["model"] = model;
  j["api_style"] = to_string(api_style);
  j["temperature"] = temperature;
  j["top_p"] = top_p;
  j["max_tokens"] = max_tokens;
  j["timeout_seconds"] = timeout_seconds;
  j["max_retries"] = max_retries;
  j["max_in_flight"] = max_in_flight;
  j["backoff_initial_ms"] = backoff_initial_ms;
  j["backoff_factor"] = backoff_factor;
  j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
  return json::parse(j.dump());
}

std::string api_key_from_env() {
  for (const char* name : {"MTPE_API_KEY", "OPENAI_API_KEY"}) {
    if (const char* v = std::getenv(name); v != nullptr && *v != '\0') return v;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Records

ordered_json record_to_json(const PostEditRecord& r) {
  ordered_json j;
  j["id"] = r.segment_id;
  j["feedback"] = r.feedback;
  j["k"] = r.k;
  j["prompt"] = r.prompt;
  j["raw_output"] = r.raw_output;
  j["hypothesis"] = r.extracted ? ordered_json(*r.extracted) : ordered_json(nullptr);
  j["failed"] = r.failed;
  j["error"] = r.error;
  return j;
}

PostEditRecord record_from_json(const json& j) {
  PostEditRecord r;
  r.segment_id = j.at("id").get<std::string>();
  r.feedback = j.value("feedback", std::string());
  r.k = j.value("k", std::size_t{0});
  r.prompt = j.value("prompt", std::string());
  r.raw_output = j.value("raw_output", std::string());
  if (j.contains("hypothesis") && !j["hypothesis"].is_null())
    r.extracted = j["hypothesis"].get<std::string>();
  r.failed = j.value("failed", false);
  r.error = j.value("error", std::string());
  r.attempts = j.value("attempts", 0);
  r.latency_ms = j.value("latency_ms", 0.0);
  if (r.failed && r.extracted) throw Error("record " + r.segment_id + " is failed but has a hypothesis");
  return r;
}

std::string records_to_jsonl(std::span<const PostEditRecord> records) {
  std::string out;
  for (const auto& r : records) out += io::dump_line(record_to_json(r)) + "\n";
  return out;
}

std::string timings_to_jsonl(std::span<const PostEditRecord> records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json j;
    j["id"] = r.segment_id;
    j["latency_ms"] = std::round(r.latency_ms * 1000.0) / 1000.0;
    j["attempts"] = r.attempts;
    out += io::dump_line(j) + "\n";
  }
  return out;
}

std::vector<PostEditRecord> records_from_jsonl(std::string_view content, const std::string& name) {
  std::vector<PostEditRecord> out;
  io::for_each_json_line(content, name,
                         [&](std::size_t, const json& j) { out.push_back(record_from_json(j)); });
  return out;
}

std::vector<PostEditRecord> read_records_jsonl(const std::filesystem::path& path) {
  return records_from_jsonl(io::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

bool istarts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && text::iequals(s.substr(0, prefix.size()), prefix);
}

std::string_view strip_quotes(std::string_view s) {
  static constexpr std::pair<std::string_view, std::string_view> kPairs[] = {
      {"\"", "\""}, {"'", "'"}, {"“", "”"}, {"„", "“"},
      {"«", "»"}, {"「", "」"},
  };
  for (const auto& [open, close] : kPairs) {
    if (s.size() >= open.size() + close.size() && s.starts_with(open) && s.ends_with(close))
      return text::trim(s.substr(open.size(), s.size() - open.size() - close.size()));
  }
  return s;
}

}  // namespace

std::optional<std::string> extract_hypothesis(std::string_view raw, const LangPair& lang) {
  std::string_view s = text::trim(raw);
  for (const std::string& cue : {"### Improved " + lang.tgt + ":", "Improved " + lang.tgt + ":",
                                 lang.tgt + ":"}) {
    if (istarts_with(s, cue)) {
      s = text::trim(s.substr(cue.size()));
      break;
    }
  }

  static const std::regex kLabelLine(R"(^[A-Z][A-Za-z ]{0,24}:(\s.*)?$)");
  std::string kept;
  std::size_t line_index = 0;
  for (const auto& line : text::split(s, '\n')) {
    std::string_view t = text::trim(line);
    if (t.empty() || t.starts_with("###")) break;
    if (line_index > 0 && std::regex_match(std::string(t), kLabelLine)) break;
    if (!kept.empty()) kept += ' ';
    kept += t;
    ++line_index;
  }
  std::string_view out = strip_quotes(text::trim(kept));
  if (out.empty()) return std::nullopt;
  return std::string(out);
}

// ---------------------------------------------------------------------------
// Batch driver

namespace {

bool retriable(int status) { return status == 0 || status == 408 || status == 429 || status >= 500; }

}  // namespace

std::vector<PostEditRecord> postedit_batch(std::span<const BatchItem> items,
                                           CompletionClient& client, const GenerationConfig& cfg) {
  cfg.validate();
  std::vector<PostEditRecord> records(items.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex collector;
  int abort_status = 0;
  std::string abort_message;

  auto process = [&](std::size_t i) {
    const BatchItem& item = items[i];
    PostEditRecord rec;
    rec.segment_id = item.segment_id;
    rec.feedback = item.feedback;
    rec.k = item.k;
    rec.prompt = item.prompt;
    const auto t0 = std::chrono::steady_clock::now();
    double backoff_ms = cfg.backoff_initial_ms;
    for (;;) {
      ++rec.attempts;
      CompletionResult res = client.complete(item.prompt);
      if (res.status >= 200 && res.status < 300) {
        rec.raw_output = res.text;
        rec.extracted = extract_hypothesis(res.text, item.lang);
        if (!rec.extracted) {
          rec.failed = true;
          rec.error = "empty output after extraction";
        }
        break;
      }
      if (!retriable(res.status)) {
        std::lock_guard lock(collector);
        if (!abort.exchange(true)) {
          abort_status = res.status;
          abort_message = "server rejected request for segment " + item.segment_id + " (HTTP " +
                          std::to_string(res.status) + "): " + res.error;
        }
        rec.failed = true;
        rec.error = res.error;
        break;
      }
      if (rec.attempts > cfg.max_retries || abort.load()) {
        rec.failed = true;
        rec.error = res.error.empty() ? "HTTP " + std::to_string(res.status) : res.error;
        break;
      }
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(backoff_ms));
      backoff_ms *= cfg.backoff_factor;
    }
    rec.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::lock_guard lock(collector);
    records[i] = std::move(rec);
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.max_in_flight), items.size());
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          if (abort.load()) return;
          std::size_t i = next.fetch_add(1);
          if (i >= items.size()) return;
          process(i);
        }
      });
    }
  }
  if (abort.load()) throw BatchAborted(abort_status, abort_message);
  return records;
}

}  // namespace mtpe::llm
