#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "mtpe/corpus.hpp"

namespace mtpe::llm {

enum class MockMode {
  EchoReference,  // answer with the segment's reference
  Identity,       // answer with the segment's original hypothesis
  Scripted,       // answer from an id -> output map
  SwapTokens,     // hypothesis with its first two whitespace tokens swapped
};

std::string_view to_string(MockMode m);
MockMode parse_mock_mode(std::string_view label);

struct MockOptions {
  MockMode mode = MockMode::Identity;
  std::map<std::string, std::string> scripted;  // segment id -> raw output
  int fail_first = 0;         // answer the first N requests with HTTP 500
  int forced_status = 0;      // answer every request with this status (e.g. 401)
  bool prefix_cue = false;    // prepend "Improved {Tgt}: "
  bool append_explanation = false;  // append "\nExplanation: ..."
};

/// Loads a scripted map from line-delimited JSON {id, output}.
std::map<std::string, std::string> load_script(const std::string& path);

/// Offline OpenAI-compatible server for tests and dry runs.
///
/// A request is matched to a corpus segment by finding the segment whose
/// source text ends latest in the prompt, i.e. the query block that closes
/// every post-editing and translation prompt.
class MockServer {
 public:
  MockServer(Corpus corpus, MockOptions opts);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds and serves on a background thread. port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop() is called.
  void listen(const std::string& host, int port);
  void stop();

  int port() const { return port_; }
  std::string endpoint() const;
  std::size_t requests_served() const { return served_.load(); }

  /// Raw text the mock answers for `prompt`; empty when no segment matches.
  std::string respond(const std::string& prompt) const;

 private:
  struct Impl;
  Corpus corpus_;
  MockOptions opts_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  std::string host_ = "127.0.0.1";
  int port_ = 0;
  std::atomic<std::size_t> served_{0};
  std::atomic<int> failures_left_{0};
};

}  // namespace mtpe::llm
