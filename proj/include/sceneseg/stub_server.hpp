#pragma once

// In-process chat-completions stub for integration tests: serves scripted
// transcripts FIFO (or via a handler), with switchable failure modes
// (HTTP 500s, omitted logprobs, finish_reason=length).

#include <atomic>
#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sceneseg/backend.hpp"
#include "sceneseg/errors.hpp"

namespace sceneseg {

inline nlohmann::json transcript_to_chat_response(const Transcript& tr,
                                                  bool include_logprobs = true,
                                                  const std::string& finish_reason = "stop") {
  nlohmann::json choice;
  choice["message"] = {{"role", "assistant"}, {"content", tr.text}};
  choice["finish_reason"] = finish_reason;
  if (include_logprobs) {
    nlohmann::json content = nlohmann::json::array();
    for (const TokenEvent& ev : tr.tokens) {
      nlohmann::json jt;
      jt["token"] = ev.token;
      jt["logprob"] = ev.logprob;
      nlohmann::json alts = nlohmann::json::array();
      for (const TokenAlt& a : ev.alternatives)
        alts.push_back({{"token", a.token}, {"logprob", a.logprob}});
      jt["top_logprobs"] = std::move(alts);
      content.push_back(std::move(jt));
    }
    choice["logprobs"] = {{"content", std::move(content)}};
  }
  nlohmann::json resp;
  resp["choices"] = nlohmann::json::array({std::move(choice)});
  return resp;
}

class StubServer {
 public:
  StubServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      handle(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) fail(ErrorKind::Transport, "stub server could not bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() { stop(); }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }
  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }

  void enqueue(Transcript tr) {
    std::lock_guard<std::mutex> lk(mu_);
    fifo_.push_back(std::move(tr));
  }

  // Handler mode: receives the parsed request body, returns the reply.
  void set_handler(std::function<Transcript(const nlohmann::json&)> handler) {
    std::lock_guard<std::mutex> lk(mu_);
    handler_ = std::move(handler);
  }

  void fail_first(int n) { fail_first_ = n; }          // HTTP 500 for the first n requests
  void omit_logprobs(bool v) { omit_logprobs_ = v; }
  void set_finish_reason(std::string r) {
    std::lock_guard<std::mutex> lk(mu_);
    finish_reason_ = std::move(r);
  }

  int requests_seen() const { return requests_; }
  nlohmann::json last_request() const {
    std::lock_guard<std::mutex> lk(mu_);
    return last_request_;
  }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    ++requests_;
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    {
      std::lock_guard<std::mutex> lk(mu_);
      last_request_ = body;
    }
    if (fail_first_ > 0) {
      --fail_first_;
      res.status = 500;
      res.set_content("{\"error\":\"scripted failure\"}", "application/json");
      return;
    }
    Transcript tr;
    std::string finish;
    bool omit;
    {
      std::lock_guard<std::mutex> lk(mu_);
      finish = finish_reason_;
      omit = omit_logprobs_;
      if (handler_) {
        tr = handler_(body);
      } else if (!fifo_.empty()) {
        tr = std::move(fifo_.front());
        fifo_.pop_front();
      } else {
        res.status = 500;
        res.set_content("{\"error\":\"stub has no scripted reply\"}", "application/json");
        return;
      }
    }
    res.set_content(transcript_to_chat_response(tr, !omit, finish).dump(),
                    "application/json");
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  std::deque<Transcript> fifo_;
  std::function<Transcript(const nlohmann::json&)> handler_;
  std::string finish_reason_ = "stop";
  std::atomic<int> fail_first_{0};
  std::atomic<bool> omit_logprobs_{false};
  std::atomic<int> requests_{0};
  nlohmann::json last_request_;
};

}  // namespace sceneseg
