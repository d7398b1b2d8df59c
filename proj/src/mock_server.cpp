#include "mtpe/mock_server.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mtpe/error.hpp"
#include "mtpe/jsonl.hpp"
#include "mtpe/text.hpp"

namespace mtpe::llm {

using nlohmann::json;

std::string_view to_string(MockMode m) {
  switch (m) {
    case MockMode::EchoReference: return "echo-reference";
    case MockMode::Identity: return "identity";
    case MockMode::Scripted: return "scripted";
    case MockMode::SwapTokens: return "swap";
  }
  return "identity";
}

MockMode parse_mock_mode(std::string_view label) {
  std::string lower = text::to_lower(text::trim(label));
  if (lower == "echo-reference" || lower == "echo") return MockMode::EchoReference;
  if (lower == "identity") return MockMode::Identity;
  if (lower == "scripted" || lower == "scripted-map") return MockMode::Scripted;
  if (lower == "swap" || lower == "swap-tokens") return MockMode::SwapTokens;
  throw ConfigError("unknown mock mode '" + std::string(label) + "'");
}

std::map<std::string, std::string> load_script(const std::string& path) {
  std::map<std::string, std::string> out;
  io::for_each_json_line(io::read_file(path), path, [&](std::size_t, const json& j) {
    out[j.at("id").get<std::string>()] = j.at("output").get<std::string>();
  });
  return out;
}

struct MockServer::Impl {
  httplib::Server server;
};

MockServer::MockServer(Corpus corpus, MockOptions opts)
    : corpus_(std::move(corpus)), opts_(std::move(opts)), impl_(std::make_unique<Impl>()) {
  failures_left_ = opts_.fail_first;

  auto handler = [this](bool chat) {
    return [this, chat](const httplib::Request& req, httplib::Response& res) {
      ++served_;
      if (opts_.forced_status != 0) {
        res.status = opts_.forced_status;
        res.set_content(R"({"error":{"message":"forced status"}})", "application/json");
        return;
      }
      if (failures_left_.fetch_sub(1) > 0) {
        res.status = 500;
        res.set_content(R"({"error":{"message":"injected failure"}})", "application/json");
        return;
      }
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception&) {
        res.status = 400;
        res.set_content(R"({"error":{"message":"invalid JSON"}})", "application/json");
        return;
      }
      std::string prompt;
      if (chat) {
        for (const auto& m : body.value("messages", json::array())) {
          if (m.value("role", "") == "user") prompt = m.value("content", "");
        }
      } else {
        prompt = body.value("prompt", "");
      }
      const std::string text = respond(prompt);
      json choice = {{"index", 0}, {"finish_reason", "stop"}};
      if (chat) {
        choice["message"] = {{"role", "assistant"}, {"content", text}};
      } else {
        choice["text"] = text;
      }
      json out = {{"id", "mock-" + std::to_string(served_.load())},
                  {"object", chat ? "chat.completion" : "text_completion"},
                  {"model", body.value("model", "mock")},
                  {"choices", json::array({choice})}};
      res.set_content(out.dump(), "application/json");
    };
  };
  for (const std::string prefix : {"", "/v1"}) {
    impl_->server.Post(prefix + "/completions", handler(false));
    impl_->server.Post(prefix + "/chat/completions", handler(true));
  }
}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    if (!impl_->server.bind_to_port(host, port)) port_ = -1;
    else port_ = port;
  }
  if (port_ <= 0) throw Error("mock server could not bind " + host);
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockServer::listen(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!impl_->server.listen(host, port)) throw Error("mock server could not listen on " + host);
}

void MockServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockServer::endpoint() const {
  return "http://" + host_ + ":" + std::to_string(port_) + "/v1";
}

std::string MockServer::respond(const std::string& prompt) const {
  // Several systems translate the same source, so ties on the source are
  // broken by which hypothesis follows it in the prompt.
  const Segment* match = nullptr;
  std::size_t best_end = 0;
  bool best_hyp = false;
  for (const auto& seg : corpus_) {
    std::size_t pos = prompt.rfind(seg.source);
    if (pos == std::string::npos) continue;
    std::size_t end = pos + seg.source.size();
    bool hyp = !seg.hypothesis.empty() && prompt.find(seg.hypothesis, end) != std::string::npos;
    bool better = match == nullptr || end > best_end;
    if (!better && end == best_end) {
      better = (hyp && !best_hyp) ||
               (hyp == best_hyp && seg.source.size() > match->source.size());
    }
    if (better) {
      match = &seg;
      best_end = end;
      best_hyp = hyp;
    }
  }
  if (match == nullptr) return {};

  std::string text;
  switch (opts_.mode) {
    case MockMode::EchoReference: text = match->reference.value_or(match->hypothesis); break;
    case MockMode::Identity: text = match->hypothesis; break;
    case MockMode::Scripted: {
      auto it = opts_.scripted.find(match->id);
      text = it == opts_.scripted.end() ? std::string() : it->second;
      break;
    }
    case MockMode::SwapTokens: {
      auto toks = text::split_whitespace(match->hypothesis);
      if (toks.size() >= 2) std::swap(toks[0], toks[1]);
      for (std::size_t i = 0; i < toks.size(); ++i) text += (i ? " " : "") + toks[i];
      break;
    }
  }
  if (opts_.prefix_cue) text = "Improved " + match->lang.tgt + ": " + text;
  if (opts_.append_explanation) text += "\nExplanation: the translation was revised.";
  return text;
}

}  // namespace mtpe::llm
