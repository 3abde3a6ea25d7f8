#pragma once

// Non-overlapping context-focus window planning. Focus spans partition
// [0, num_shots); contexts extend each focus by floor/ceil margin halves
// (smaller half on the left) and clamp to the movie bounds.

#include <string>
#include <utility>
#include <vector>

#include "sceneseg/errors.hpp"

namespace sceneseg {

struct WindowPlanConfig {
  int context_len = 20;  // N
  int focus_len = 10;    // F

  bool operator==(const WindowPlanConfig&) const = default;
};

struct ContextWindow {
  std::string movie_id;
  int context_start = 0;  // half-open [context_start, context_end)
  int context_end = 0;
  int focus_start = 0;    // half-open, subset of context
  int focus_end = 0;

  int context_size() const { return context_end - context_start; }
  int focus_size() const { return focus_end - focus_start; }

  bool operator==(const ContextWindow&) const = default;
};

inline std::vector<ContextWindow> plan_windows(int num_shots, const WindowPlanConfig& cfg,
                                               const std::string& movie_id = {}) {
  if (cfg.focus_len < 1 || cfg.focus_len > cfg.context_len)
    fail(ErrorKind::Config, "focus_len must satisfy 1 <= F <= N");
  if (num_shots < 1) fail(ErrorKind::Config, "num_shots must be >= 1");

  const int margin = cfg.context_len - cfg.focus_len;
  const int left = margin / 2;          // smaller half on the left
  const int right = margin - left;

  std::vector<ContextWindow> out;
  for (int start = 0; start < num_shots; start += cfg.focus_len) {
    ContextWindow w;
    w.movie_id = movie_id;
    w.focus_start = start;
    w.focus_end = std::min(num_shots, start + cfg.focus_len);
    w.context_start = std::max(0, w.focus_start - left);
    w.context_end = std::min(num_shots, w.focus_end + right);
    out.push_back(std::move(w));
  }
  return out;
}

// (absolute shot_id, position within focus) pairs, position 0-based.
inline std::vector<std::pair<int, int>> window_positions(const ContextWindow& w) {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<size_t>(w.focus_size()));
  for (int i = w.focus_start; i < w.focus_end; ++i)
    out.emplace_back(i, i - w.focus_start);
  return out;
}

}  // namespace sceneseg
