#pragma once

// Single-file run configuration. CLI flags override config values which
// override defaults; parse(serialize(cfg)) == cfg.

#include <string>
#include <vector>

#include <json.hpp>

#include "sceneseg/backend.hpp"
#include "sceneseg/errors.hpp"
#include "sceneseg/http_backend.hpp"
#include "sceneseg/model.hpp"
#include "sceneseg/prompt.hpp"
#include "sceneseg/simkit.hpp"
#include "sceneseg/windowing.hpp"

namespace sceneseg {

enum class BackendKind { Mock, Http };

// Run-level scheme: prompt schemes plus the repeated-sampling variant of
// Concise.
enum class RunScheme { Comprehensive, Concise, ConciseSampling, Chapter };

inline const char* run_scheme_name(RunScheme s) {
  switch (s) {
    case RunScheme::Comprehensive: return "comprehensive";
    case RunScheme::Concise: return "concise";
    case RunScheme::ConciseSampling: return "concise_sampling";
    case RunScheme::Chapter: return "chapter";
  }
  return "unknown";
}

inline RunScheme run_scheme_from(const std::string& s) {
  if (s == "comprehensive") return RunScheme::Comprehensive;
  if (s == "concise") return RunScheme::Concise;
  if (s == "concise_sampling") return RunScheme::ConciseSampling;
  if (s == "chapter") return RunScheme::Chapter;
  fail(ErrorKind::Config, "unknown scheme '" + s + "'");
}

inline Scheme prompt_scheme(RunScheme s) {
  switch (s) {
    case RunScheme::Comprehensive: return Scheme::Comprehensive;
    case RunScheme::Concise:
    case RunScheme::ConciseSampling: return Scheme::Concise;
    case RunScheme::Chapter: return Scheme::Chapter;
  }
  return Scheme::Comprehensive;
}

struct RunConfig {
  BackendKind backend = BackendKind::Mock;
  HttpBackendConfig http;
  WindowPlanConfig window;
  PromptOptions prompt;  // prompt.scheme is derived from `scheme` at run time
  DecodeParams decode;
  RunScheme scheme = RunScheme::Comprehensive;
  int sampling_runs = 5;  // m, for concise_sampling
  NoiseParams noise;      // mock backend only
  std::string template_path;    // empty = built-in template
  std::string frame_cache_dir;  // empty = no on-disk annotated-frame cache
  std::vector<std::string> manifests;
  std::string out_dir = ".";
  int concurrency = 4;
  std::uint64_t seed = 0;

  bool operator==(const RunConfig&) const = default;
};

inline void validate_run_config(const RunConfig& cfg) {
  if (cfg.concurrency < 1) fail(ErrorKind::Config, "concurrency must be >= 1");
  if (cfg.sampling_runs < 1) fail(ErrorKind::Config, "sampling_runs must be >= 1");
  if (cfg.window.focus_len < 1 || cfg.window.focus_len > cfg.window.context_len)
    fail(ErrorKind::Config, "window must satisfy 1 <= focus_len <= context_len");
  if (cfg.prompt.frames_per_shot < 1 || cfg.prompt.frames_per_shot > 3)
    fail(ErrorKind::Config, "frames_per_shot must be in 1..3");
  validate_decode_params(cfg.decode);
  validate_noise(cfg.noise);
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["backend"] = cfg.backend == BackendKind::Mock ? "mock" : "http";
  j["http"] = {{"endpoint", cfg.http.endpoint},   {"api_key", cfg.http.api_key},
               {"model", cfg.http.model},         {"max_attempts", cfg.http.max_attempts},
               {"backoff_ms", cfg.http.backoff_ms}, {"timeout_s", cfg.http.timeout_s}};
  j["window"] = {{"context_len", cfg.window.context_len}, {"focus_len", cfg.window.focus_len}};
  j["prompt"] = {{"frames_per_shot", cfg.prompt.frames_per_shot},
                 {"include_subtitles", cfg.prompt.include_subtitles},
                 {"include_actors", cfg.prompt.include_actors},
                 {"include_markers", cfg.prompt.include_markers},
                 {"explain", cfg.prompt.explain}};
  j["decode"] = {{"temperature", cfg.decode.temperature},
                 {"max_new_tokens", cfg.decode.max_new_tokens},
                 {"top_logprobs_k", cfg.decode.top_logprobs_k}};
  if (cfg.decode.seed) j["decode"]["seed"] = *cfg.decode.seed;
  j["scheme"] = run_scheme_name(cfg.scheme);
  j["sampling_runs"] = cfg.sampling_runs;
  j["noise"] = {{"p_flip", cfg.noise.p_flip},
                {"conf_correct", {cfg.noise.conf_correct.a, cfg.noise.conf_correct.b}},
                {"conf_wrong", {cfg.noise.conf_wrong.a, cfg.noise.conf_wrong.b}},
                {"edge_margin", cfg.noise.edge.margin},
                {"edge_extra_flip", cfg.noise.edge.extra_flip},
                {"seed", cfg.noise.seed}};
  j["template"] = cfg.template_path;
  j["frame_cache_dir"] = cfg.frame_cache_dir;
  j["manifests"] = cfg.manifests;
  j["out_dir"] = cfg.out_dir;
  j["concurrency"] = cfg.concurrency;
  j["seed"] = cfg.seed;
  return j;
}

namespace detail {

// nlohmann silently converts booleans to arithmetic types; reject that.
inline double num_field(const nlohmann::json& v, const char* name) {
  if (!v.is_number())
    fail(ErrorKind::Config, std::string("bad config: ") + name + " must be a number");
  return v.get<double>();
}

inline std::int64_t int_field(const nlohmann::json& v, const char* name) {
  if (!v.is_number_integer())
    fail(ErrorKind::Config, std::string("bad config: ") + name + " must be an integer");
  return v.get<std::int64_t>();
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using detail::int_field;
  using detail::num_field;
  RunConfig cfg;
  try {
    if (j.contains("backend")) {
      const std::string b = j["backend"].get<std::string>();
      if (b == "mock") cfg.backend = BackendKind::Mock;
      else if (b == "http") cfg.backend = BackendKind::Http;
      else fail(ErrorKind::Config, "unknown backend '" + b + "'");
    }
    if (j.contains("http")) {
      const auto& h = j["http"];
      if (h.contains("endpoint")) cfg.http.endpoint = h["endpoint"].get<std::string>();
      if (h.contains("api_key")) cfg.http.api_key = h["api_key"].get<std::string>();
      if (h.contains("model")) cfg.http.model = h["model"].get<std::string>();
      if (h.contains("max_attempts"))
        cfg.http.max_attempts = static_cast<int>(int_field(h["max_attempts"], "http.max_attempts"));
      if (h.contains("backoff_ms"))
        cfg.http.backoff_ms = static_cast<int>(int_field(h["backoff_ms"], "http.backoff_ms"));
      if (h.contains("timeout_s"))
        cfg.http.timeout_s = static_cast<int>(int_field(h["timeout_s"], "http.timeout_s"));
    }
    if (j.contains("window")) {
      const auto& w = j["window"];
      if (w.contains("context_len"))
        cfg.window.context_len = static_cast<int>(int_field(w["context_len"], "window.context_len"));
      if (w.contains("focus_len"))
        cfg.window.focus_len = static_cast<int>(int_field(w["focus_len"], "window.focus_len"));
    }
    if (j.contains("prompt")) {
      const auto& p = j["prompt"];
      if (p.contains("frames_per_shot"))
        cfg.prompt.frames_per_shot =
            static_cast<int>(int_field(p["frames_per_shot"], "prompt.frames_per_shot"));
      if (p.contains("include_subtitles"))
        cfg.prompt.include_subtitles = p["include_subtitles"].get<bool>();
      if (p.contains("include_actors"))
        cfg.prompt.include_actors = p["include_actors"].get<bool>();
      if (p.contains("include_markers"))
        cfg.prompt.include_markers = p["include_markers"].get<bool>();
      if (p.contains("explain")) cfg.prompt.explain = p["explain"].get<bool>();
    }
    if (j.contains("decode")) {
      const auto& d = j["decode"];
      if (d.contains("temperature"))
        cfg.decode.temperature = num_field(d["temperature"], "decode.temperature");
      if (d.contains("max_new_tokens"))
        cfg.decode.max_new_tokens =
            static_cast<int>(int_field(d["max_new_tokens"], "decode.max_new_tokens"));
      if (d.contains("top_logprobs_k"))
        cfg.decode.top_logprobs_k =
            static_cast<int>(int_field(d["top_logprobs_k"], "decode.top_logprobs_k"));
      if (d.contains("seed") && !d["seed"].is_null())
        cfg.decode.seed = int_field(d["seed"], "decode.seed");
    }
    if (j.contains("scheme")) cfg.scheme = run_scheme_from(j["scheme"].get<std::string>());
    if (j.contains("sampling_runs"))
      cfg.sampling_runs = static_cast<int>(int_field(j["sampling_runs"], "sampling_runs"));
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      if (n.contains("p_flip")) cfg.noise.p_flip = num_field(n["p_flip"], "noise.p_flip");
      if (n.contains("conf_correct")) {
        cfg.noise.conf_correct.a = num_field(n["conf_correct"].at(0), "noise.conf_correct");
        cfg.noise.conf_correct.b = num_field(n["conf_correct"].at(1), "noise.conf_correct");
      }
      if (n.contains("conf_wrong")) {
        cfg.noise.conf_wrong.a = num_field(n["conf_wrong"].at(0), "noise.conf_wrong");
        cfg.noise.conf_wrong.b = num_field(n["conf_wrong"].at(1), "noise.conf_wrong");
      }
      if (n.contains("edge_margin"))
        cfg.noise.edge.margin = static_cast<int>(int_field(n["edge_margin"], "noise.edge_margin"));
      if (n.contains("edge_extra_flip"))
        cfg.noise.edge.extra_flip = num_field(n["edge_extra_flip"], "noise.edge_extra_flip");
      if (n.contains("seed"))
        cfg.noise.seed = static_cast<std::uint64_t>(int_field(n["seed"], "noise.seed"));
    }
    if (j.contains("template")) cfg.template_path = j["template"].get<std::string>();
    if (j.contains("frame_cache_dir"))
      cfg.frame_cache_dir = j["frame_cache_dir"].get<std::string>();
    if (j.contains("manifests"))
      cfg.manifests = j["manifests"].get<std::vector<std::string>>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("concurrency"))
      cfg.concurrency = static_cast<int>(int_field(j["concurrency"], "concurrency"));
    if (j.contains("seed")) cfg.seed = static_cast<std::uint64_t>(int_field(j["seed"], "seed"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("bad config: ") + e.what());
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  return run_config_from_json(detail::parse_json_file(path));
}

inline void save_run_config(const RunConfig& cfg, const std::string& path) {
  detail::write_json_file(run_config_to_json(cfg), path);
}

}  // namespace sceneseg
