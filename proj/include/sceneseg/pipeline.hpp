#pragma once

// Window-level dispatch: plans windows, builds prompts, calls the backend
// under a bounded thread count, and reduces indexed results into a
// MoviePrediction. Results are keyed by window index, so scheduling order
// cannot affect any output byte.

#include <atomic>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "sceneseg/backend.hpp"
#include "sceneseg/config.hpp"
#include "sceneseg/decode.hpp"
#include "sceneseg/errors.hpp"
#include "sceneseg/model.hpp"
#include "sceneseg/prompt.hpp"
#include "sceneseg/rng.hpp"
#include "sceneseg/windowing.hpp"

namespace sceneseg {

struct SegmentOutcome {
  MoviePrediction prediction;
  int windows = 0;
  long long prompt_words = 0;  // telemetry vs. the configured budget
};

namespace detail {

template <typename Fn>
void parallel_indexed(size_t n, int concurrency, Fn&& fn) {
  if (n == 0) return;
  const size_t workers =
      std::min<size_t>(static_cast<size_t>(std::max(1, concurrency)), n);
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const size_t i = next.fetch_add(1);
          if (i >= n) return;
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);  // lowest window index wins
}

}  // namespace detail

inline SegmentOutcome run_segmentation(const Movie& movie, Backend& backend,
                                       const RunConfig& cfg, const PromptTemplate& tpl) {
  if (cfg.scheme == RunScheme::Chapter)
    fail(ErrorKind::Config, "chapter scheme is handled by run_chaptering");
  const std::vector<ContextWindow> windows =
      plan_windows(static_cast<int>(movie.shots.size()), cfg.window, movie.movie_id);

  PromptOptions popts = cfg.prompt;
  popts.scheme = prompt_scheme(cfg.scheme);

  FrameStore frames(movie.frame_root, cfg.frame_cache_dir);
  std::vector<WindowResult> results(windows.size());
  std::vector<int> words(windows.size(), 0);

  detail::parallel_indexed(windows.size(), cfg.concurrency, [&](size_t i) {
    const ContextWindow& w = windows[i];
    WindowResult r;
    r.window = w;
    if (cfg.scheme == RunScheme::ConciseSampling) {
      DetRng temp_rng(mix_seed(mix_seed(cfg.seed, fnv1a64(movie.movie_id)),
                               static_cast<std::uint64_t>(w.focus_start)));
      std::vector<Transcript> runs;
      Prompt prompt = build_prompt(movie, w, popts, tpl, &frames);
      words[i] = prompt.word_count;
      for (int run = 0; run < cfg.sampling_runs; ++run) {
        DecodeParams params = cfg.decode;
        params.temperature = temp_rng.uniform(0.5, 1.0);
        params.seed = static_cast<std::int64_t>(
            mix_seed(cfg.seed, (static_cast<std::uint64_t>(i) << 8) | run));
        runs.push_back(backend.generate(prompt, params));
      }
      auto [verdicts, failures] = repeated_sampling_confidence(runs, prompt.scope);
      r.verdicts = std::move(verdicts);
      r.failures = std::move(failures);
    } else {
      Prompt prompt = build_prompt(movie, w, popts, tpl, &frames);
      words[i] = prompt.word_count;
      DecodeParams params = cfg.decode;
      if (cfg.scheme == RunScheme::Comprehensive) params.temperature = 0.0;  // greedy
      const Transcript tr = backend.generate(prompt, params);
      if (cfg.scheme == RunScheme::Comprehensive) {
        auto [verdicts, failures] = extract_verdicts(tr, prompt.scope);
        r.verdicts = std::move(verdicts);
        r.failures = std::move(failures);
      } else {
        auto [verdicts, failures] = concise_verdicts(tr, prompt.scope);
        r.verdicts = std::move(verdicts);
        r.failures = std::move(failures);
      }
    }
    results[i] = std::move(r);
  });

  SegmentOutcome out;
  out.prediction = assemble_movie(results, static_cast<int>(movie.shots.size()),
                                  movie.movie_id, run_scheme_name(cfg.scheme));
  out.windows = static_cast<int>(windows.size());
  for (int wds : words) out.prompt_words += wds;
  return out;
}

struct ChapterOutcome {
  std::string movie_id;
  std::vector<Chapter> chapters;
  std::vector<ParseFailure> failures;
};

// Chaptering runs the whole movie as a single window: boundaries need not
// align with shots, so there is no per-shot focus partition to keep.
inline ChapterOutcome run_chaptering(const Movie& movie, Backend& backend,
                                     const RunConfig& cfg, const PromptTemplate& tpl) {
  const int n = static_cast<int>(movie.shots.size());
  ContextWindow w;
  w.movie_id = movie.movie_id;
  w.context_start = 0;
  w.context_end = n;
  w.focus_start = 0;
  w.focus_end = n;

  PromptOptions popts = cfg.prompt;
  popts.scheme = Scheme::Chapter;
  FrameStore frames(movie.frame_root, cfg.frame_cache_dir);
  const Prompt prompt = build_prompt(movie, w, popts, tpl, &frames);
  const Transcript tr = backend.generate(prompt, cfg.decode);

  ChapterOutcome out;
  out.movie_id = movie.movie_id;
  auto [chapters, failures] = parse_chapters(tr.text);
  out.chapters = std::move(chapters);
  out.failures = std::move(failures);
  return out;
}

inline void save_chapter_outcome(const ChapterOutcome& out, const std::string& path) {
  nlohmann::json j;
  j["movie_id"] = out.movie_id;
  nlohmann::json arr = nlohmann::json::array();
  for (const Chapter& c : out.chapters)
    arr.push_back({{"start_s", c.start_s}, {"title", c.title}});
  j["chapters"] = std::move(arr);
  nlohmann::json failures = nlohmann::json::array();
  for (const ParseFailure& f : out.failures)
    failures.push_back({{"window", f.window_index},
                        {"line", f.line},
                        {"reason", fail_reason_name(f.reason)},
                        {"shot_id", f.shot_id}});
  j["failures"] = std::move(failures);
  detail::write_json_file(j, path);
}

}  // namespace sceneseg
