#pragma once

// Domain types and manifest ingestion. Frames are referenced by relative
// path and never touched here; prompt construction loads them lazily.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sceneseg/errors.hpp"
#include "sceneseg/text.hpp"

namespace sceneseg {

struct Shot {
  int shot_id = 0;
  std::vector<std::string> frames;   // relative image refs, non-empty
  std::string subtitle;              // may be empty
  std::vector<std::string> actors;   // may be empty
  std::optional<double> start_s;
  std::optional<double> end_s;
  std::optional<bool> is_scene_end;  // positive = scene-closing shot
};

struct Movie {
  std::string movie_id;
  std::vector<Shot> shots;
  bool has_labels = false;     // true iff every shot carries is_scene_end
  std::string frame_root;      // directory of the manifest; not serialized
};

struct Chapter {
  double start_s = 0.0;
  std::string title;
};

enum class IssueCode {
  NoShots,
  NonConsecutiveIds,
  EmptyFrames,
  ReversedTimeRange,
  NonMonotoneTimes,
  MissingTimestamps,
  PartialLabels,
};

inline const char* issue_code_name(IssueCode c) {
  switch (c) {
    case IssueCode::NoShots: return "no_shots";
    case IssueCode::NonConsecutiveIds: return "non_consecutive_ids";
    case IssueCode::EmptyFrames: return "empty_frames";
    case IssueCode::ReversedTimeRange: return "reversed_time_range";
    case IssueCode::NonMonotoneTimes: return "non_monotone_times";
    case IssueCode::MissingTimestamps: return "missing_timestamps";
    case IssueCode::PartialLabels: return "partial_labels";
  }
  return "unknown";
}

struct Issue {
  IssueCode code;
  int shot_id = -1;  // -1 when the issue is movie-level
  std::string message;
};

enum class ValidateMode { Segmentation, Chaptering };

namespace detail {

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::Schema, "invalid JSON in " + path);
  return j;
}

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "short write to " + path);
}

inline std::string dir_of(const std::string& path) {
  size_t slash = path.find_last_of('/');
  if (slash == std::string::npos) return ".";
  if (slash == 0) return "/";
  return path.substr(0, slash);
}

template <typename T>
T require_field(const nlohmann::json& j, const char* key, const char* ctx) {
  auto it = j.find(key);
  if (it == j.end())
    fail(ErrorKind::Schema, std::string("missing field '") + key + "' in " + ctx);
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::Schema, std::string("wrong type for field '") + key + "' in " + ctx);
  }
}

}  // namespace detail

inline std::vector<Issue> validate_movie(const Movie& movie, ValidateMode mode) {
  std::vector<Issue> issues;
  if (movie.shots.empty()) {
    issues.push_back({IssueCode::NoShots, -1, "movie has no shots"});
    return issues;
  }
  int labeled = 0;
  std::optional<double> prev_start;
  for (size_t i = 0; i < movie.shots.size(); ++i) {
    const Shot& s = movie.shots[i];
    if (s.shot_id != static_cast<int>(i))
      issues.push_back({IssueCode::NonConsecutiveIds, s.shot_id,
                        "expected shot_id " + std::to_string(i)});
    if (s.frames.empty())
      issues.push_back({IssueCode::EmptyFrames, s.shot_id, "shot has no frames"});
    if (s.start_s && s.end_s && *s.end_s < *s.start_s)
      issues.push_back({IssueCode::ReversedTimeRange, s.shot_id,
                        "end_s precedes start_s"});
    if (s.start_s) {
      if (prev_start && *s.start_s < *prev_start)
        issues.push_back({IssueCode::NonMonotoneTimes, s.shot_id,
                          "start_s decreases"});
      prev_start = s.start_s;
    }
    if (mode == ValidateMode::Chaptering && !(s.start_s && s.end_s))
      issues.push_back({IssueCode::MissingTimestamps, s.shot_id,
                        "chaptering requires start_s and end_s"});
    if (s.is_scene_end) ++labeled;
  }
  if (labeled != 0 && labeled != static_cast<int>(movie.shots.size()))
    issues.push_back({IssueCode::PartialLabels, -1,
                      "some shots carry is_scene_end, others do not"});
  return issues;
}

inline Movie load_manifest(const std::string& path) {
  nlohmann::json j = detail::parse_json_file(path);
  if (!j.is_object()) fail(ErrorKind::Schema, "manifest root must be an object: " + path);
  Movie m;
  m.movie_id = detail::require_field<std::string>(j, "movie_id", "manifest");
  auto shots = j.find("shots");
  if (shots == j.end() || !shots->is_array())
    fail(ErrorKind::Schema, "manifest needs a 'shots' array: " + path);
  for (const auto& js : *shots) {
    if (!js.is_object()) fail(ErrorKind::Schema, "shot entries must be objects");
    Shot s;
    s.shot_id = detail::require_field<int>(js, "shot_id", "shot");
    s.frames = detail::require_field<std::vector<std::string>>(js, "frames", "shot");
    s.subtitle = detail::require_field<std::string>(js, "subtitle", "shot");
    s.actors = detail::require_field<std::vector<std::string>>(js, "actors", "shot");
    if (js.contains("start_s")) s.start_s = detail::require_field<double>(js, "start_s", "shot");
    if (js.contains("end_s")) s.end_s = detail::require_field<double>(js, "end_s", "shot");
    if (js.contains("is_scene_end"))
      s.is_scene_end = detail::require_field<bool>(js, "is_scene_end", "shot");
    m.shots.push_back(std::move(s));
  }
  m.frame_root = detail::dir_of(path);
  int labeled = 0;
  for (const Shot& s : m.shots)
    if (s.is_scene_end) ++labeled;
  m.has_labels = !m.shots.empty() && labeled == static_cast<int>(m.shots.size());

  for (const Issue& is : validate_movie(m, ValidateMode::Segmentation)) {
    if (is.code == IssueCode::PartialLabels) continue;  // reported, not fatal
    fail(ErrorKind::Invariant,
         std::string(issue_code_name(is.code)) + " in " + path + ": " + is.message);
  }
  return m;
}

inline void save_manifest(const Movie& movie, const std::string& path) {
  nlohmann::json j;
  j["movie_id"] = movie.movie_id;
  nlohmann::json shots = nlohmann::json::array();
  for (const Shot& s : movie.shots) {
    nlohmann::json js;
    js["shot_id"] = s.shot_id;
    js["frames"] = s.frames;
    js["subtitle"] = s.subtitle;
    js["actors"] = s.actors;
    if (s.start_s) js["start_s"] = *s.start_s;
    if (s.end_s) js["end_s"] = *s.end_s;
    if (s.is_scene_end) js["is_scene_end"] = *s.is_scene_end;
    shots.push_back(std::move(js));
  }
  j["shots"] = std::move(shots);
  detail::write_json_file(j, path);
}

// Ground-truth boundary labels; requires has_labels.
inline std::vector<bool> boundary_labels(const Movie& movie) {
  if (!movie.has_labels)
    fail(ErrorKind::Invariant, "movie " + movie.movie_id + " is not fully labeled");
  std::vector<bool> out;
  out.reserve(movie.shots.size());
  for (const Shot& s : movie.shots) out.push_back(*s.is_scene_end);
  return out;
}

inline std::vector<Chapter> load_chapters(const std::string& path) {
  nlohmann::json j = detail::parse_json_file(path);
  auto arr = j.find("chapters");
  if (arr == j.end() || !arr->is_array())
    fail(ErrorKind::Schema, "chapters file needs a 'chapters' array: " + path);
  std::vector<Chapter> out;
  for (const auto& jc : *arr) {
    Chapter c;
    c.start_s = detail::require_field<double>(jc, "start_s", "chapter");
    c.title = detail::require_field<std::string>(jc, "title", "chapter");
    if (c.start_s < 0) fail(ErrorKind::Invariant, "chapter start_s < 0 in " + path);
    if (trim(c.title).empty()) fail(ErrorKind::Invariant, "empty chapter title in " + path);
    out.push_back(std::move(c));
  }
  return out;
}

inline void save_chapters(const std::vector<Chapter>& chapters, const std::string& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Chapter& c : chapters) {
    nlohmann::json jc;
    jc["start_s"] = c.start_s;
    jc["title"] = c.title;
    arr.push_back(std::move(jc));
  }
  nlohmann::json j;
  j["chapters"] = std::move(arr);
  detail::write_json_file(j, path);
}

}  // namespace sceneseg
