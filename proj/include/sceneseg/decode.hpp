#pragma once

// Structured-output parsing (verdicts, chapters, rationales), Yes/No
// probability extraction from token alternatives, and window-to-movie
// aggregation. Parsers never throw on bad input: every dropped line
// becomes a ParseFailure record.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sceneseg/backend.hpp"
#include "sceneseg/errors.hpp"
#include "sceneseg/model.hpp"
#include "sceneseg/text.hpp"
#include "sceneseg/windowing.hpp"

namespace sceneseg {

enum class VerdictQuality { Ok, FallbackFloor, Defaulted };

inline const char* verdict_quality_name(VerdictQuality q) {
  switch (q) {
    case VerdictQuality::Ok: return "ok";
    case VerdictQuality::FallbackFloor: return "fallback_floor";
    case VerdictQuality::Defaulted: return "defaulted";
  }
  return "unknown";
}

struct ShotVerdict {
  int shot_id = 0;
  bool decision_yes = false;
  double p_yes = 0.0;
  double p_no = 1.0;
  double confidence = 0.0;  // p_yes / (p_yes + p_no)
  VerdictQuality quality = VerdictQuality::Ok;
};

enum class FailReason { Malformed, Duplicate, UnexpectedId, Missing, NonMonotone };

inline const char* fail_reason_name(FailReason r) {
  switch (r) {
    case FailReason::Malformed: return "malformed";
    case FailReason::Duplicate: return "duplicate";
    case FailReason::UnexpectedId: return "unexpected_id";
    case FailReason::Missing: return "missing";
    case FailReason::NonMonotone: return "non_monotone";
  }
  return "unknown";
}

struct ParseFailure {
  int window_index = 0;
  std::string line;
  FailReason reason = FailReason::Malformed;
  int shot_id = -1;
};

struct MoviePrediction {
  std::string movie_id;
  std::vector<double> confidences;        // aligned to shot ids 0..n-1
  std::vector<bool> decisions;
  std::string scheme;
  std::vector<ParseFailure> failures;
  std::vector<VerdictQuality> qualities;  // not serialized
};

// Draft from line parsing: the verdict's token index feeds yes_no_probs.
struct VerdictDraft {
  int shot_id = 0;
  bool decision_yes = false;
  size_t token_index = SIZE_MAX;
};

namespace detail {

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

inline size_t skip_ws(std::string_view s, size_t i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return i;
}

// Parses a run of digits; rejects absurd lengths so fuzz inputs cannot
// overflow. Returns npos on failure.
inline size_t parse_int(std::string_view s, size_t i, int& out) {
  size_t j = i;
  while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
  if (j == i || j - i > 9) return std::string_view::npos;
  int v = 0;
  for (size_t k = i; k < j; ++k) v = v * 10 + (s[k] - '0');
  out = v;
  return j;
}

struct VerdictLine {
  int shot_id = 0;
  bool decision_yes = false;
  size_t verdict_offset = 0;  // char offset of the Yes/No word within the line
};

// Accepts "Shot 5: Yes", "shot_id:5: No", lenient about spacing and a
// trailing period; case-insensitive keywords; strict otherwise.
inline bool parse_verdict_line(std::string_view line, VerdictLine& out) {
  size_t i = skip_ws(line, 0);
  if (!starts_with_ci(line.substr(i), "shot")) return false;
  i += 4;
  if (starts_with_ci(line.substr(i), "_id")) i += 3;
  i = skip_ws(line, i);
  if (i < line.size() && line[i] == ':') {
    size_t j = skip_ws(line, i + 1);
    // only consume this colon if digits follow ("shot_id:5: Yes")
    int probe = 0;
    if (parse_int(line, j, probe) != std::string_view::npos) i = j;
  }
  size_t j = parse_int(line, i, out.shot_id);
  if (j == std::string_view::npos) return false;
  i = skip_ws(line, j);
  if (i >= line.size() || line[i] != ':') return false;
  i = skip_ws(line, i + 1);
  out.verdict_offset = i;
  if (starts_with_ci(line.substr(i), "yes")) {
    out.decision_yes = true;
    i += 3;
  } else if (starts_with_ci(line.substr(i), "no")) {
    out.decision_yes = false;
    i += 2;
  } else {
    return false;
  }
  if (i < line.size() && line[i] == '.') ++i;
  return skip_ws(line, i) == line.size();
}

inline bool parse_rationale_line(std::string_view line, int& shot_id,
                                 std::string_view& text) {
  size_t i = skip_ws(line, 0);
  if (!starts_with_ci(line.substr(i), "rationale")) return false;
  i = skip_ws(line, i + 9);
  size_t j = parse_int(line, i, shot_id);
  if (j == std::string_view::npos) return false;
  i = skip_ws(line, j);
  if (i >= line.size() || line[i] != ':') return false;
  text = trim(line.substr(i + 1));
  return !text.empty();
}

inline bool is_rationale_like(std::string_view line) {
  int id;
  std::string_view text;
  return parse_rationale_line(line, id, text);
}

// Prefix character offsets of each token in the transcript text.
inline std::vector<size_t> token_offsets(const Transcript& tr) {
  std::vector<size_t> prefix(1, 0);
  for (const TokenEvent& ev : tr.tokens) prefix.push_back(prefix.back() + ev.token.size());
  return prefix;
}

inline size_t token_index_for_offset(const std::vector<size_t>& prefix, size_t off) {
  if (prefix.size() < 2 || off >= prefix.back()) return SIZE_MAX;
  auto it = std::upper_bound(prefix.begin(), prefix.end(), off);
  return static_cast<size_t>(it - prefix.begin()) - 1;
}

}  // namespace detail

inline std::pair<std::vector<VerdictDraft>, std::vector<ParseFailure>>
parse_comprehensive(const Transcript& tr, const std::vector<int>& expected_ids) {
  std::vector<VerdictDraft> drafts;
  std::vector<ParseFailure> failures;
  const std::set<int> expected(expected_ids.begin(), expected_ids.end());
  std::set<int> seen;
  const std::vector<size_t> prefix = detail::token_offsets(tr);

  for (std::string_view raw : split_lines(tr.text)) {
    std::string_view line = rtrim(raw);
    if (line.empty()) continue;
    if (detail::is_rationale_like(line)) continue;  // separate grammar
    detail::VerdictLine v;
    if (!detail::parse_verdict_line(line, v)) {
      failures.push_back({0, std::string(line), FailReason::Malformed, -1});
      continue;
    }
    if (!expected.count(v.shot_id)) {
      failures.push_back({0, std::string(line), FailReason::UnexpectedId, v.shot_id});
      continue;
    }
    if (seen.count(v.shot_id)) {
      failures.push_back({0, std::string(line), FailReason::Duplicate, v.shot_id});
      continue;
    }
    seen.insert(v.shot_id);
    const size_t char_off =
        static_cast<size_t>(line.data() - tr.text.data()) + v.verdict_offset;
    drafts.push_back({v.shot_id, v.decision_yes,
                      detail::token_index_for_offset(prefix, char_off)});
  }
  for (int id : expected_ids)
    if (!seen.count(id)) failures.push_back({0, "", FailReason::Missing, id});
  std::sort(drafts.begin(), drafts.end(),
            [](const VerdictDraft& a, const VerdictDraft& b) { return a.shot_id < b.shot_id; });
  return {std::move(drafts), std::move(failures)};
}

inline std::pair<std::vector<int>, std::vector<ParseFailure>> parse_concise(
    const Transcript& tr, const std::vector<int>& expected_ids) {
  std::vector<int> boundaries;
  std::vector<ParseFailure> failures;
  const std::set<int> expected(expected_ids.begin(), expected_ids.end());
  std::set<int> seen;
  for (std::string_view raw : split_lines(tr.text)) {
    std::string_view line = rtrim(raw);
    if (line.empty()) continue;
    if (detail::is_rationale_like(line)) continue;
    detail::VerdictLine v;
    if (!detail::parse_verdict_line(line, v) || !v.decision_yes) {
      failures.push_back({0, std::string(line), FailReason::Malformed, -1});
      continue;
    }
    if (!expected.count(v.shot_id)) {
      failures.push_back({0, std::string(line), FailReason::UnexpectedId, v.shot_id});
      continue;
    }
    if (seen.count(v.shot_id)) {
      failures.push_back({0, std::string(line), FailReason::Duplicate, v.shot_id});
      continue;
    }
    seen.insert(v.shot_id);
    boundaries.push_back(v.shot_id);
  }
  std::sort(boundaries.begin(), boundaries.end());
  return {std::move(boundaries), std::move(failures)};
}

inline std::pair<std::vector<Chapter>, std::vector<ParseFailure>> parse_chapters(
    const std::string& text) {
  std::vector<Chapter> chapters;
  std::vector<ParseFailure> failures;
  for (std::string_view raw : split_lines(text)) {
    std::string_view line = rtrim(raw);
    if (line.empty()) continue;
    size_t i = detail::skip_ws(line, 0);
    int h = 0, m = 0, s = 0;
    size_t j = detail::parse_int(line, i, h);
    bool ok = j != std::string_view::npos && j < line.size() && line[j] == ':';
    if (ok) {
      j = detail::parse_int(line, j + 1, m);
      ok = j != std::string_view::npos && j < line.size() && line[j] == ':';
    }
    if (ok) {
      j = detail::parse_int(line, j + 1, s);
      ok = j != std::string_view::npos;
    }
    ok = ok && m <= 59 && s <= 59;
    if (ok) {
      j = detail::skip_ws(line, j);
      ok = j < line.size() && line[j] == '-';
    }
    std::string_view title;
    if (ok) {
      title = trim(line.substr(j + 1));
      ok = !title.empty();
    }
    if (!ok) {
      failures.push_back({0, std::string(line), FailReason::Malformed, -1});
      continue;
    }
    const double start = h * 3600.0 + m * 60.0 + s;
    if (!chapters.empty() && start < chapters.back().start_s) {
      failures.push_back({0, std::string(line), FailReason::NonMonotone, -1});
      continue;
    }
    chapters.push_back({start, std::string(title)});
  }
  return {std::move(chapters), std::move(failures)};
}

inline std::pair<std::vector<std::pair<int, std::string>>, std::vector<ParseFailure>>
parse_rationales(const std::string& text) {
  std::vector<std::pair<int, std::string>> out;
  std::vector<ParseFailure> failures;
  for (std::string_view raw : split_lines(text)) {
    std::string_view line = rtrim(raw);
    if (line.empty()) continue;
    int id = 0;
    std::string_view body;
    if (detail::parse_rationale_line(line, id, body)) {
      out.emplace_back(id, std::string(body));
      continue;
    }
    detail::VerdictLine v;
    if (detail::parse_verdict_line(line, v)) continue;  // verdict grammar
    failures.push_back({0, std::string(line), FailReason::Malformed, -1});
  }
  return {std::move(out), std::move(failures)};
}

// Yes/No probability mass at one token position. Variants match after
// stripping leading whitespace, case-insensitively. When one side is
// absent from the top-k alternatives it gets a pessimistic floor of
// exp(min logprob - 1) and the verdict is flagged.
inline std::tuple<double, double, VerdictQuality> yes_no_probs(const TokenEvent& event) {
  double p_yes = 0.0, p_no = 0.0;
  bool saw_yes = false, saw_no = false;
  double min_lp = 0.0;
  bool any = false;
  for (const TokenAlt& alt : event.alternatives) {
    if (!any || alt.logprob < min_lp) min_lp = alt.logprob;
    any = true;
    const std::string_view body = ltrim(alt.token);
    if (iequals(body, "yes")) {
      p_yes += std::exp(alt.logprob);
      saw_yes = true;
    } else if (iequals(body, "no")) {
      p_no += std::exp(alt.logprob);
      saw_no = true;
    }
  }
  if (!saw_yes && !saw_no)
    fail(ErrorKind::VerdictTokenMissing, "no Yes/No variant among alternatives");
  if (saw_yes && saw_no) return {p_yes, p_no, VerdictQuality::Ok};
  const double floor = std::exp(min_lp - 1.0);
  if (!saw_yes) p_yes = floor;
  if (!saw_no) p_no = floor;
  return {p_yes, p_no, VerdictQuality::FallbackFloor};
}

inline double confidence_from_probs(double p_yes, double p_no) {
  if (p_yes < 0 || p_no < 0) fail(ErrorKind::Invariant, "negative probability");
  if (p_yes + p_no <= 0) fail(ErrorKind::DegenerateProbs, "p_yes + p_no == 0");
  return p_yes / (p_yes + p_no);
}

// Comprehensive-scheme verdicts with confidences for one window.
inline std::pair<std::vector<ShotVerdict>, std::vector<ParseFailure>> extract_verdicts(
    const Transcript& tr, const std::vector<int>& expected_ids) {
  auto [drafts, failures] = parse_comprehensive(tr, expected_ids);
  std::vector<ShotVerdict> verdicts;
  for (const VerdictDraft& d : drafts) {
    if (d.token_index == SIZE_MAX || d.token_index >= tr.tokens.size())
      fail(ErrorKind::VerdictTokenMissing,
           "no token event at verdict position for shot " + std::to_string(d.shot_id));
    auto [p_yes, p_no, quality] = yes_no_probs(tr.tokens[d.token_index]);
    ShotVerdict v;
    v.shot_id = d.shot_id;
    v.decision_yes = d.decision_yes;
    v.p_yes = p_yes;
    v.p_no = p_no;
    v.confidence = confidence_from_probs(p_yes, p_no);
    v.quality = quality;
    verdicts.push_back(v);
  }
  return {std::move(verdicts), std::move(failures)};
}

// Concise-scheme verdicts: decision from membership, confidence 1/0.
inline std::pair<std::vector<ShotVerdict>, std::vector<ParseFailure>> concise_verdicts(
    const Transcript& tr, const std::vector<int>& expected_ids) {
  auto [ids, failures] = parse_concise(tr, expected_ids);
  const std::set<int> yes(ids.begin(), ids.end());
  std::vector<ShotVerdict> verdicts;
  for (int id : expected_ids) {
    ShotVerdict v;
    v.shot_id = id;
    v.decision_yes = yes.count(id) > 0;
    v.p_yes = v.decision_yes ? 1.0 : 0.0;
    v.p_no = 1.0 - v.p_yes;
    v.confidence = v.p_yes;
    verdicts.push_back(v);
  }
  return {std::move(verdicts), std::move(failures)};
}

// Confidence = proportion of runs emitting Yes (repeated sampling).
inline std::pair<std::vector<ShotVerdict>, std::vector<ParseFailure>>
repeated_sampling_confidence(const std::vector<Transcript>& transcripts,
                             const std::vector<int>& expected_ids) {
  if (transcripts.empty()) fail(ErrorKind::Config, "repeated sampling needs m >= 1 runs");
  std::map<int, int> yes_counts;
  std::vector<ParseFailure> failures;
  for (const Transcript& tr : transcripts) {
    auto [ids, f] = parse_concise(tr, expected_ids);
    for (int id : ids) ++yes_counts[id];
    failures.insert(failures.end(), f.begin(), f.end());
  }
  const double m = static_cast<double>(transcripts.size());
  std::vector<ShotVerdict> verdicts;
  for (int id : expected_ids) {
    ShotVerdict v;
    v.shot_id = id;
    const int c = yes_counts.count(id) ? yes_counts[id] : 0;
    v.confidence = c / m;
    v.decision_yes = v.confidence >= 0.5;
    v.p_yes = v.confidence;
    v.p_no = 1.0 - v.confidence;
    verdicts.push_back(v);
  }
  return {std::move(verdicts), std::move(failures)};
}

struct WindowResult {
  ContextWindow window;
  std::vector<ShotVerdict> verdicts;
  std::vector<ParseFailure> failures;
};

inline MoviePrediction assemble_movie(const std::vector<WindowResult>& windows,
                                      int num_shots, const std::string& movie_id,
                                      const std::string& scheme) {
  std::vector<const WindowResult*> ordered;
  for (const WindowResult& w : windows) ordered.push_back(&w);
  std::sort(ordered.begin(), ordered.end(), [](const WindowResult* a, const WindowResult* b) {
    return a->window.focus_start < b->window.focus_start;
  });
  int cursor = 0;
  for (const WindowResult* w : ordered) {
    if (w->window.focus_start != cursor)
      fail(ErrorKind::Partition, "focus spans do not partition the movie (at shot " +
                                     std::to_string(cursor) + ")");
    cursor = w->window.focus_end;
  }
  if (cursor != num_shots)
    fail(ErrorKind::Partition, "focus spans stop at " + std::to_string(cursor) + " of " +
                                   std::to_string(num_shots));

  MoviePrediction pred;
  pred.movie_id = movie_id;
  pred.scheme = scheme;
  pred.confidences.assign(static_cast<size_t>(num_shots), 0.0);
  pred.decisions.assign(static_cast<size_t>(num_shots), false);
  pred.qualities.assign(static_cast<size_t>(num_shots), VerdictQuality::Defaulted);

  for (size_t wi = 0; wi < ordered.size(); ++wi) {
    const WindowResult* w = ordered[wi];
    for (const ShotVerdict& v : w->verdicts) {
      if (v.shot_id < w->window.focus_start || v.shot_id >= w->window.focus_end)
        fail(ErrorKind::Invariant, "verdict outside its focus span");
      pred.confidences[v.shot_id] = v.confidence;
      pred.decisions[v.shot_id] = v.decision_yes;
      pred.qualities[v.shot_id] = v.quality;
    }
    for (ParseFailure f : w->failures) {
      f.window_index = static_cast<int>(wi);
      pred.failures.push_back(std::move(f));
    }
    // every defaulted focus shot must carry a Missing record
    for (int id = w->window.focus_start; id < w->window.focus_end; ++id) {
      if (pred.qualities[id] != VerdictQuality::Defaulted) continue;
      bool recorded = false;
      for (const ParseFailure& f : pred.failures)
        if (f.reason == FailReason::Missing && f.shot_id == id &&
            f.window_index == static_cast<int>(wi))
          recorded = true;
      if (!recorded)
        pred.failures.push_back(
            {static_cast<int>(wi), "", FailReason::Missing, id});
    }
  }
  return pred;
}

// Canonical surface forms (round-trip partners of the parsers).
inline std::string format_verdicts(const std::vector<ShotVerdict>& verdicts) {
  std::string out;
  for (const ShotVerdict& v : verdicts) {
    out += "Shot " + std::to_string(v.shot_id) + ": " + (v.decision_yes ? "Yes" : "No");
    out += '\n';
  }
  return out;
}

inline std::string format_chapter_line(const Chapter& c) {
  const long long total = static_cast<long long>(c.start_s + 0.5);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld - ", total / 3600,
                (total / 60) % 60, total % 60);
  return std::string(buf) + c.title;
}

inline std::string format_chapters(const std::vector<Chapter>& chapters) {
  std::string out;
  for (const Chapter& c : chapters) {
    out += format_chapter_line(c);
    out += '\n';
  }
  return out;
}

inline nlohmann::json prediction_to_json(const MoviePrediction& pred) {
  nlohmann::json j;
  j["movie_id"] = pred.movie_id;
  j["confidences"] = pred.confidences;
  j["decisions"] = pred.decisions;
  j["scheme"] = pred.scheme;
  nlohmann::json failures = nlohmann::json::array();
  for (const ParseFailure& f : pred.failures) {
    nlohmann::json jf;
    jf["window"] = f.window_index;
    jf["line"] = f.line;
    jf["reason"] = fail_reason_name(f.reason);
    jf["shot_id"] = f.shot_id;
    failures.push_back(std::move(jf));
  }
  j["failures"] = std::move(failures);
  return j;
}

inline void save_prediction(const MoviePrediction& pred, const std::string& path) {
  detail::write_json_file(prediction_to_json(pred), path);
}

inline MoviePrediction load_prediction(const std::string& path) {
  nlohmann::json j = detail::parse_json_file(path);
  for (const char* key : {"movie_id", "confidences", "decisions", "scheme", "failures"})
    if (!j.contains(key))
      fail(ErrorKind::InvalidDump, std::string("dump missing key '") + key + "': " + path);
  MoviePrediction pred;
  try {
    pred.movie_id = j["movie_id"].get<std::string>();
    pred.confidences = j["confidences"].get<std::vector<double>>();
    pred.decisions = j["decisions"].get<std::vector<bool>>();
    pred.scheme = j["scheme"].get<std::string>();
    for (const auto& jf : j["failures"]) {
      ParseFailure f;
      f.window_index = jf.at("window").get<int>();
      f.line = jf.at("line").get<std::string>();
      const std::string reason = jf.at("reason").get<std::string>();
      if (reason == "malformed") f.reason = FailReason::Malformed;
      else if (reason == "duplicate") f.reason = FailReason::Duplicate;
      else if (reason == "unexpected_id") f.reason = FailReason::UnexpectedId;
      else if (reason == "missing") f.reason = FailReason::Missing;
      else if (reason == "non_monotone") f.reason = FailReason::NonMonotone;
      else fail(ErrorKind::InvalidDump, "unknown failure reason '" + reason + "'");
      f.shot_id = jf.at("shot_id").get<int>();
      pred.failures.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::InvalidDump, std::string("malformed dump ") + path + ": " + e.what());
  }
  if (pred.confidences.size() != pred.decisions.size())
    fail(ErrorKind::InvalidDump, "confidences/decisions length mismatch in " + path);
  for (double c : pred.confidences)
    if (!(c >= 0.0 && c <= 1.0))
      fail(ErrorKind::InvalidDump, "confidence outside [0,1] in " + path);
  return pred;
}

}  // namespace sceneseg
