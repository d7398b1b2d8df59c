#include <regex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mtpe/llm_gateway.hpp"

namespace mtpe::llm {

using nlohmann::json;

OpenAiClient::OpenAiClient(GenerationConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg_.endpoint, m, kUrl)) throw ConfigError("malformed endpoint " + cfg_.endpoint);
  scheme_host_port_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : std::string();
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme_host_port_.rfind("https://", 0) == 0)
    throw ConfigError("https endpoints need a build with OpenSSL support");
#endif
}

json OpenAiClient::request_body(const std::string& prompt) const {
  json body;
  body["model"] = cfg_.model;
  if (cfg_.api_style == ApiStyle::Chat) {
    body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  } else {
    body["prompt"] = prompt;
  }
  body["temperature"] = cfg_.temperature;
  body["top_p"] = cfg_.top_p;
  body["max_tokens"] = cfg_.max_tokens;
  if (cfg_.seed) body["seed"] = *cfg_.seed;
  return body;
}

std::string OpenAiClient::parse_response(const std::string& body, ApiStyle style) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(std::string("response is not JSON: ") + e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
    throw Error("response has no choices");
  const json& choice = j["choices"][0];
  if (style == ApiStyle::Chat) {
    if (!choice.contains("message") || !choice["message"].contains("content"))
      throw Error("chat response has no message content");
    const json& content = choice["message"]["content"];
    return content.is_null() ? std::string() : content.get<std::string>();
  }
  if (!choice.contains("text")) throw Error("completion response has no text");
  return choice["text"].get<std::string>();
}

CompletionResult OpenAiClient::complete(const std::string& prompt) {
  httplib::Client cli(scheme_host_port_);
  const auto timeout = std::chrono::duration<double>(cfg_.timeout_seconds);
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  const std::string path = path_prefix_ + (cfg_.api_style == ApiStyle::Chat ? "/chat/completions"
                                                                            : "/completions");
  auto res = cli.Post(path, headers, request_body(prompt).dump(), "application/json");
  CompletionResult out;
  if (!res) {
    out.error = "transport error: " + httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  if (res->status < 200 || res->status >= 300) {
    out.error = res->body.substr(0, 512);
    return out;
  }
  try {
    out.text = parse_response(res->body, cfg_.api_style);
  } catch (const Error& e) {
    // A malformed success body is treated like a server fault and retried.
    out.status = 502;
    out.error = e.what();
  }
  return out;
}

}  // namespace mtpe::llm
