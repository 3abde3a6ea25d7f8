#pragma once

// Chat-completions HTTP backend with per-token top-k logprobs. Images
// travel as base64 data URLs in block order (images before the block's
// text). Transport failures retry with exponential backoff; protocol
// failures are terminal.

#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "sceneseg/backend.hpp"
#include "sceneseg/errors.hpp"
#include "sceneseg/image.hpp"

namespace sceneseg {

struct HttpBackendConfig {
  std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
  std::string api_key;  // sent as a bearer token when non-empty
  std::string model = "scene-segmenter";
  int max_attempts = 3;
  int backoff_ms = 100;
  int timeout_s = 60;

  bool operator==(const HttpBackendConfig&) const = default;
};

namespace detail {

struct ParsedUrl {
  std::string host;
  int port = 80;
  std::string path = "/";
};

inline ParsedUrl parse_http_url(const std::string& url) {
  const std::string prefix = "http://";
  if (url.rfind(prefix, 0) != 0)
    fail(ErrorKind::Config, "endpoint must start with http://: " + url);
  ParsedUrl out;
  std::string rest = url.substr(prefix.size());
  const size_t slash = rest.find('/');
  std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
  if (slash != std::string::npos) out.path = rest.substr(slash);
  const size_t colon = hostport.find(':');
  if (colon == std::string::npos) {
    out.host = hostport;
  } else {
    out.host = hostport.substr(0, colon);
    try {
      out.port = std::stoi(hostport.substr(colon + 1));
    } catch (const std::exception&) {
      fail(ErrorKind::Config, "bad port in endpoint " + url);
    }
  }
  if (out.host.empty()) fail(ErrorKind::Config, "empty host in endpoint " + url);
  return out;
}

inline std::string base64_encode(std::string_view data) {
  static const char tbl[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= data.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                       (static_cast<unsigned char>(data[i + 1]) << 8) |
                       static_cast<unsigned char>(data[i + 2]);
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += tbl[(v >> 6) & 63];
    out += tbl[v & 63];
  }
  if (i + 1 == data.size()) {
    const unsigned v = static_cast<unsigned char>(data[i]) << 16;
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == data.size()) {
    const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                       (static_cast<unsigned char>(data[i + 1]) << 8);
    out += tbl[(v >> 18) & 63];
    out += tbl[(v >> 12) & 63];
    out += tbl[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

}  // namespace detail

inline nlohmann::json build_chat_request(const Prompt& prompt, const DecodeParams& params,
                                         const std::string& model) {
  nlohmann::json parts = nlohmann::json::array();
  parts.push_back({{"type", "text"}, {"text", prompt.instruction_text}});
  for (const ShotBlock& block : prompt.blocks) {
    for (const RasterImage& im : block.images) {
      nlohmann::json part;
      part["type"] = "image_url";
      part["image_url"] = {{"url", "data:image/x-portable-pixmap;base64," +
                                       detail::base64_encode(encode_ppm(im))}};
      parts.push_back(std::move(part));
    }
    parts.push_back({{"type", "text"}, {"text", block.text}});
  }
  parts.push_back({{"type", "text"}, {"text", prompt.scope_text}});

  nlohmann::json req;
  req["model"] = model;
  req["messages"] = nlohmann::json::array();
  req["messages"].push_back({{"role", "system"}, {"content", prompt.system_text}});
  req["messages"].push_back({{"role", "user"}, {"content", std::move(parts)}});
  req["temperature"] = params.temperature;
  req["max_tokens"] = params.max_new_tokens;
  req["logprobs"] = true;
  req["top_logprobs"] = params.top_logprobs_k;
  if (params.seed) req["seed"] = *params.seed;
  return req;
}

inline Transcript parse_chat_response(const nlohmann::json& j) {
  try {
    const auto& choices = j.at("choices");
    if (!choices.is_array() || choices.empty())
      fail(ErrorKind::Protocol, "response has no choices");
    const auto& choice = choices.at(0);
    if (choice.contains("finish_reason") && choice["finish_reason"].is_string() &&
        choice["finish_reason"].get<std::string>() == "length")
      fail(ErrorKind::BudgetExceeded, "generation hit max_tokens before completing");
    Transcript tr;
    tr.text = choice.at("message").at("content").get<std::string>();
    if (!choice.contains("logprobs") || choice["logprobs"].is_null() ||
        !choice["logprobs"].contains("content"))
      fail(ErrorKind::Protocol, "response is missing logprobs");
    for (const auto& jt : choice["logprobs"]["content"]) {
      TokenEvent ev;
      ev.token = jt.at("token").get<std::string>();
      ev.logprob = jt.at("logprob").get<double>();
      if (!jt.contains("top_logprobs"))
        fail(ErrorKind::Protocol, "token event is missing top_logprobs");
      for (const auto& ja : jt["top_logprobs"])
        ev.alternatives.push_back(
            {ja.at("token").get<std::string>(), ja.at("logprob").get<double>()});
      tr.tokens.push_back(std::move(ev));
    }
    check_transcript(tr);
    return tr;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Protocol, std::string("malformed response: ") + e.what());
  }
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg)
      : cfg_(std::move(cfg)), url_(detail::parse_http_url(cfg_.endpoint)) {
    if (cfg_.max_attempts < 1) fail(ErrorKind::Config, "max_attempts must be >= 1");
  }

  Transcript generate(const Prompt& prompt, const DecodeParams& params) override {
    validate_decode_params(params);
    const std::string body = build_chat_request(prompt, params, cfg_.model).dump();
    const nlohmann::json resp = post_with_retry(body);
    return parse_chat_response(resp);
  }

  // Connection probe: does the server answer, and does it return logprobs?
  enum class Health { Healthy, Degraded, Unreachable };
  struct HealthReport {
    Health status = Health::Unreachable;
    std::string detail;
  };

  HealthReport check_health() {
    nlohmann::json req;
    req["model"] = cfg_.model;
    req["messages"] = nlohmann::json::array();
    req["messages"].push_back({{"role", "system"}, {"content", "health probe"}});
    req["messages"].push_back({{"role", "user"}, {"content", "Reply with: Shot 0: No"}});
    req["temperature"] = 0.0;
    req["max_tokens"] = 16;
    req["logprobs"] = true;
    req["top_logprobs"] = 1;
    nlohmann::json resp;
    try {
      resp = post_with_retry(req.dump());
    } catch (const Error& e) {
      return {Health::Unreachable, e.what()};
    }
    try {
      parse_chat_response(resp);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Protocol) return {Health::Degraded, e.what()};
      return {Health::Unreachable, e.what()};
    }
    return {Health::Healthy, "server returns top-k logprobs"};
  }

 private:
  nlohmann::json post_with_retry(const std::string& body) {
    std::string last_error;
    for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
      if (attempt > 1)
        std::this_thread::sleep_for(
            std::chrono::milliseconds(cfg_.backoff_ms << (attempt - 2)));
      httplib::Client cli(url_.host, url_.port);
      cli.set_connection_timeout(cfg_.timeout_s, 0);
      cli.set_read_timeout(cfg_.timeout_s, 0);
      httplib::Headers headers;
      if (!cfg_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + cfg_.api_key);
      auto res = cli.Post(url_.path, headers, body, "application/json");
      if (!res) {
        last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded()) fail(ErrorKind::Protocol, "response body is not JSON");
      return j;
    }
    fail(ErrorKind::Transport, last_error + " after " +
                                   std::to_string(cfg_.max_attempts) + " attempts to " +
                                   cfg_.endpoint);
  }

  HttpBackendConfig cfg_;
  detail::ParsedUrl url_;
};

}  // namespace sceneseg
