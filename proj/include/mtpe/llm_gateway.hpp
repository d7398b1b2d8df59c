#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mtpe/corpus.hpp"
#include "mtpe/error.hpp"

namespace mtpe::llm {

/// Request body shape sent to the server.
enum class ApiStyle {
  Completion,  // POST {endpoint}/completions with "prompt"
  Chat,        // POST {endpoint}/chat/completions with a single user message
};

std::string_view to_string(ApiStyle s);
ApiStyle parse_api_style(std::string_view label);

struct GenerationConfig {
  std::string endpoint = "http://127.0.0.1:8000/v1";
  std::string model = "llama-2-7b";
  ApiStyle api_style = ApiStyle::Completion;
  double temperature = 0.0;  // greedy decoding
  double top_p = 1.0;
  int max_tokens = 256;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int max_in_flight = 4;
  int backoff_initial_ms = 500;
  double backoff_factor = 2.0;
  std::optional<std::uint64_t> seed;
  std::string api_key;  // sent as a bearer token when non-empty

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  /// Serializable view without the API key.
  nlohmann::json to_json() const;
};

/// Reads MTPE_API_KEY, falling back to OPENAI_API_KEY.
std::string api_key_from_env();

/// Outcome of one HTTP exchange.
struct CompletionResult {
  int status = 0;             // HTTP status; 0 when the transport failed
  std::string text;           // generated text on success
  std::string error;          // transport or server error message
};

/// Something that turns a prompt into generated text.
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  /// Must be callable concurrently from several threads.
  virtual CompletionResult complete(const std::string& prompt) = 0;
};

/// OpenAI-compatible HTTP client (completion or chat shape).
class OpenAiClient final : public CompletionClient {
 public:
  explicit OpenAiClient(GenerationConfig cfg);
  CompletionResult complete(const std::string& prompt) override;

  /// JSON request body for `prompt` under the configured shape.
  nlohmann::json request_body(const std::string& prompt) const;
  /// Extracts the generated text from a response body. Throws Error if the
  /// body does not follow the schema.
  static std::string parse_response(const std::string& body, ApiStyle style);

 private:
  GenerationConfig cfg_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

struct PostEditRecord {
  std::string segment_id;
  std::string feedback;
  std::size_t k = 0;
  std::string prompt;
  std::string raw_output;
  std::optional<std::string> extracted;
  bool failed = false;
  std::string error;
  double latency_ms = 0.0;
  int attempts = 0;
};

/// Deterministic fields only; latency and attempt counts go to the timings file.
nlohmann::ordered_json record_to_json(const PostEditRecord& r);
PostEditRecord record_from_json(const nlohmann::json& j);
std::string records_to_jsonl(std::span<const PostEditRecord> records);
std::string timings_to_jsonl(std::span<const PostEditRecord> records);
std::vector<PostEditRecord> read_records_jsonl(const std::filesystem::path& path);
std::vector<PostEditRecord> records_from_jsonl(std::string_view content, const std::string& name = "");

/// Strips a leading "Improved {Tgt}:" / "{Tgt}:" cue, keeps the text up to the
/// first blank line, "###" line or "Label:" commentary line, then trims
/// whitespace and one pair of surrounding quotes. nullopt when nothing is left.
std::optional<std::string> extract_hypothesis(std::string_view raw, const LangPair& lang);

/// One prompt to send.
struct BatchItem {
  std::string segment_id;
  LangPair lang;
  std::string prompt;
  std::string feedback;
  std::size_t k = 0;
};

/// Raised when the server rejects the request itself (auth or other 4xx);
/// retrying cannot help so the batch stops.
class BatchAborted : public Error {
 public:
  BatchAborted(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Sends every item with at most cfg.max_in_flight requests outstanding.
/// Transport errors, 5xx, 408 and 429 are retried with exponential backoff
/// up to cfg.max_retries times, after which the record is marked failed.
/// Records come back in input order.
std::vector<PostEditRecord> postedit_batch(std::span<const BatchItem> items,
                                           CompletionClient& client, const GenerationConfig& cfg);

}  // namespace mtpe::llm
