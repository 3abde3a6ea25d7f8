#pragma once

// Synthetic movies with known scene structure plus a mock backend whose
// replies are ground truth corrupted by controllable noise. Everything is
// a pure function of the seeds, so pipelines built on this are exactly
// reproducible and desk-scale verifiable.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sceneseg/backend.hpp"
#include "sceneseg/decode.hpp"
#include "sceneseg/errors.hpp"
#include "sceneseg/image.hpp"
#include "sceneseg/model.hpp"
#include "sceneseg/prompt.hpp"
#include "sceneseg/rng.hpp"

namespace sceneseg {

struct SyntheticConfig {
  int num_movies = 1;
  int shots_per_movie = 200;
  int scene_len_min = 3;
  int scene_len_max = 8;   // uniform integer scene lengths
  int topic_vocab = 40;
  int actor_vocab = 30;
  std::uint64_t seed = 0;
};

struct BetaParams {
  double a = 1.0;
  double b = 1.0;

  bool operator==(const BetaParams&) const = default;
};

// Extra flip probability for focus shots with thin surrounding context:
// a shot whose smaller context margin is m gets extra * max(0, m* - m)/m*.
struct EdgeDegradation {
  int margin = 0;  // m*; 0 disables
  double extra_flip = 0.0;

  bool operator==(const EdgeDegradation&) const = default;
};

struct NoiseParams {
  double p_flip = 0.0;
  BetaParams conf_correct{8.0, 2.0};
  BetaParams conf_wrong{2.0, 2.0};
  EdgeDegradation edge{};
  std::uint64_t seed = 0;

  bool operator==(const NoiseParams&) const = default;
};

inline void validate_noise(const NoiseParams& n) {
  if (n.p_flip < 0 || n.p_flip > 1) fail(ErrorKind::Config, "p_flip must be in [0,1]");
  if (n.conf_correct.a <= 0 || n.conf_correct.b <= 0 || n.conf_wrong.a <= 0 ||
      n.conf_wrong.b <= 0)
    fail(ErrorKind::Config, "Beta parameters must be > 0");
  if (n.edge.extra_flip < 0 || n.edge.extra_flip > 1)
    fail(ErrorKind::Config, "edge extra_flip must be in [0,1]");
}

struct SyntheticMovie {
  Movie movie;                 // labeled, timestamped
  std::vector<int> scene_of_shot;
  std::vector<Chapter> chapters;
  std::vector<std::array<std::uint8_t, 3>> scene_colors;
};

namespace detail {

inline std::string topic_word(const SyntheticConfig& cfg, DetRng& rng) {
  return "topic" + std::to_string(rng.uniform_int(0, cfg.topic_vocab - 1));
}

}  // namespace detail

inline SyntheticMovie generate_movie(const SyntheticConfig& cfg, int index) {
  if (cfg.shots_per_movie < 1 || cfg.scene_len_min < 1 ||
      cfg.scene_len_max < cfg.scene_len_min || cfg.topic_vocab < 1 || cfg.actor_vocab < 1)
    fail(ErrorKind::Config, "bad synthetic config");
  DetRng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(index)));

  SyntheticMovie sm;
  char idbuf[32];
  std::snprintf(idbuf, sizeof idbuf, "synth_%04d", index);
  sm.movie.movie_id = idbuf;
  sm.movie.has_labels = true;

  std::vector<int> scene_lengths;
  int remaining = cfg.shots_per_movie;
  while (remaining > 0) {
    int len = static_cast<int>(rng.uniform_int(cfg.scene_len_min, cfg.scene_len_max));
    if (len > remaining) len = remaining;
    scene_lengths.push_back(len);
    remaining -= len;
  }

  double clock = 0.0;
  int shot_id = 0;
  for (size_t k = 0; k < scene_lengths.size(); ++k) {
    const std::string topic = detail::topic_word(cfg, rng);
    std::vector<std::string> cast;
    const int n_actors = static_cast<int>(rng.uniform_int(2, 3));
    for (int a = 0; a < n_actors; ++a)
      cast.push_back("A" + std::to_string(rng.uniform_int(0, cfg.actor_vocab - 1)));
    sm.scene_colors.push_back({static_cast<std::uint8_t>(30 + rng.uniform_int(196)),
                               static_cast<std::uint8_t>(30 + rng.uniform_int(196)),
                               static_cast<std::uint8_t>(30 + rng.uniform_int(196))});
    sm.chapters.push_back(
        {clock, "Scene " + std::to_string(k + 1) + " " + topic});

    for (int s = 0; s < scene_lengths[k]; ++s, ++shot_id) {
      Shot shot;
      shot.shot_id = shot_id;
      for (int v = 0; v < 3; ++v) {
        char ref[64];
        std::snprintf(ref, sizeof ref, "frames/scene_%04zu_v%d.ppm", k, v);
        shot.frames.push_back(ref);
      }
      if (rng.bernoulli(0.1)) {
        shot.subtitle = "";
      } else {
        shot.subtitle = "They keep talking about " + topic + " near take " +
                        std::to_string(rng.uniform_int(0, 99)) + ".";
      }
      shot.actors = cast;
      const double dur = static_cast<double>(rng.uniform_int(2, 4));
      shot.start_s = clock;
      shot.end_s = clock + dur;
      clock += dur;
      shot.is_scene_end = (s == scene_lengths[k] - 1);
      sm.movie.shots.push_back(std::move(shot));
      sm.scene_of_shot.push_back(static_cast<int>(k));
    }
  }
  return sm;
}

// Materializes <out_root>/<movie_id>/{manifest.json, chapters.json, frames/}.
// Frame files are shared per scene (three tinted variants), deliberately
// smaller than the model input size so the resize path is exercised.
inline std::string write_movie_assets(const SyntheticMovie& sm, const std::string& out_root) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(out_root) / sm.movie.movie_id;
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + (dir / "frames").string());

  for (size_t k = 0; k < sm.scene_colors.size(); ++k) {
    for (int v = 0; v < 3; ++v) {
      auto tint = [&](std::uint8_t c) {
        const int t = static_cast<int>(c) + (v - 1) * 12;
        return static_cast<std::uint8_t>(t < 0 ? 0 : (t > 255 ? 255 : t));
      };
      const RasterImage im = RasterImage::solid(64, 28, tint(sm.scene_colors[k][0]),
                                                tint(sm.scene_colors[k][1]),
                                                tint(sm.scene_colors[k][2]));
      char name[64];
      std::snprintf(name, sizeof name, "scene_%04zu_v%d.ppm", k, v);
      save_ppm(im, (dir / "frames" / name).string());
    }
  }
  save_manifest(sm.movie, (dir / "manifest.json").string());
  save_chapters(sm.chapters, (dir / "chapters.json").string());
  return dir.string();
}

// Ground-truth-driven backend. Verdicts equal the label flipped with
// probability p_flip (+ edge degradation); verdict-token logprobs are
// synthesized so confidence extraction recovers a Beta-shaped confidence
// aligned with correctness. Seeded per (movie, window, run): scheduling
// order cannot change any output.
class MockBackend : public Backend {
 public:
  explicit MockBackend(NoiseParams noise = {}) : noise_(noise) { validate_noise(noise); }

  void register_movie(const Movie& movie) {
    labels_[movie.movie_id] = boundary_labels(movie);
  }
  void register_chapters(const std::string& movie_id, std::vector<Chapter> chapters) {
    chapters_[movie_id] = std::move(chapters);
  }
  void register_synthetic(const SyntheticMovie& sm) {
    register_movie(sm.movie);
    register_chapters(sm.movie.movie_id, sm.chapters);
  }

  Transcript generate(const Prompt& prompt, const DecodeParams& params) override {
    validate_decode_params(params);
    if (prompt.scope.empty())
      fail(ErrorKind::ScopeMissing, "prompt carries no structured scope");
    const std::uint64_t wseed = window_seed(prompt, params);

    Transcript tr;
    if (prompt.scheme == Scheme::Chapter) {
      emit_chapters(prompt, wseed, tr);
    } else {
      emit_verdicts(prompt, wseed, tr);
    }
    if (static_cast<int>(tr.tokens.size()) > params.max_new_tokens)
      fail(ErrorKind::BudgetExceeded,
           "mock reply needs " + std::to_string(tr.tokens.size()) + " tokens, budget " +
               std::to_string(params.max_new_tokens));
    check_transcript(tr);
    return tr;
  }

 private:
  static TokenEvent plain_token(std::string text) {
    TokenEvent ev;
    ev.token = std::move(text);
    ev.logprob = -0.01;
    ev.alternatives = {{ev.token, ev.logprob}};
    return ev;
  }

  std::uint64_t window_seed(const Prompt& prompt, const DecodeParams& params) const {
    const std::uint64_t a = mix_seed(noise_.seed, fnv1a64(prompt.window.movie_id));
    const std::uint64_t b =
        mix_seed(static_cast<std::uint64_t>(prompt.window.focus_start),
                 static_cast<std::uint64_t>(params.seed.value_or(0)));
    return mix_seed(a, b);
  }

  double edge_extra(int min_margin) const {
    if (noise_.edge.margin <= 0) return 0.0;
    const double lack =
        std::max(0, noise_.edge.margin - min_margin) / static_cast<double>(noise_.edge.margin);
    return noise_.edge.extra_flip * lack;
  }

  const std::vector<bool>& truth_for(const std::string& movie_id) const {
    auto it = labels_.find(movie_id);
    if (it == labels_.end())
      fail(ErrorKind::Config, "mock has no ground truth for movie " + movie_id);
    return it->second;
  }

  void emit_verdicts(const Prompt& prompt, std::uint64_t wseed, Transcript& tr) {
    const std::vector<bool>& truth = truth_for(prompt.window.movie_id);
    std::vector<std::pair<int, std::string>> rationales;
    for (int id : prompt.scope) {
      if (id < 0 || id >= static_cast<int>(truth.size()))
        fail(ErrorKind::Invariant, "scope shot outside movie");
      DetRng rng(mix_seed(wseed, static_cast<std::uint64_t>(id)));
      const int left = id - prompt.window.context_start;
      const int right = prompt.window.context_end - 1 - id;
      double flip = noise_.p_flip + edge_extra(std::min(left, right));
      if (flip > 1.0) flip = 1.0;
      const bool label = truth[id];
      const bool decision = rng.bernoulli(flip) ? !label : label;
      const bool correct = decision == label;
      const double s = rng.beta(correct ? noise_.conf_correct.a : noise_.conf_wrong.a,
                                correct ? noise_.conf_correct.b : noise_.conf_wrong.b);
      double strength = 0.5 + 0.5 * s;
      if (strength < 0.5 + 1e-6) strength = 0.5 + 1e-6;
      if (strength > 1.0 - 1e-6) strength = 1.0 - 1e-6;
      const double c = decision ? strength : 1.0 - strength;  // target p(Yes) share

      if (prompt.scheme == Scheme::Concise && !decision) continue;
      tr.tokens.push_back(plain_token("Shot"));
      tr.tokens.push_back(plain_token(" " + std::to_string(id)));
      tr.tokens.push_back(plain_token(":"));

      TokenEvent verdict;
      const double lp_yes = std::log(c * 0.98);
      const double lp_no = std::log((1.0 - c) * 0.98);
      verdict.token = decision ? " Yes" : " No";
      verdict.logprob = decision ? lp_yes : lp_no;
      if (lp_yes >= lp_no) {
        verdict.alternatives = {{" Yes", lp_yes}, {" No", lp_no}};
      } else {
        verdict.alternatives = {{" No", lp_no}, {" Yes", lp_yes}};
      }
      tr.tokens.push_back(std::move(verdict));
      tr.tokens.push_back(plain_token("\n"));

      if (prompt.explain && decision)
        rationales.emplace_back(id, "subtitle topic and cast change after shot " +
                                        std::to_string(id) + ".");
    }
    for (const auto& [id, text] : rationales)
      tr.tokens.push_back(
          plain_token("Rationale " + std::to_string(id) + ": " + text + "\n"));
    for (const TokenEvent& ev : tr.tokens) tr.text += ev.token;
  }

  void emit_chapters(const Prompt& prompt, std::uint64_t wseed, Transcript& tr) {
    auto it = chapters_.find(prompt.window.movie_id);
    if (it == chapters_.end())
      fail(ErrorKind::Config, "mock has no chapters for movie " + prompt.window.movie_id);
    for (size_t k = 0; k < it->second.size(); ++k) {
      DetRng rng(mix_seed(wseed, 0x100000 + k));
      if (k > 0 && rng.bernoulli(noise_.p_flip)) continue;  // dropped chapter
      tr.tokens.push_back(plain_token(format_chapter_line(it->second[k]) + "\n"));
    }
    for (const TokenEvent& ev : tr.tokens) tr.text += ev.token;
  }

  NoiseParams noise_;
  std::map<std::string, std::vector<bool>> labels_;
  std::map<std::string, std::vector<Chapter>> chapters_;
};

}  // namespace sceneseg
