#pragma once

// Structured prompt assembly: system text, scheme instructions, per-shot
// blocks (images first, then metadata), and the focus-scope declaration.
// Wording comes from a sectioned template so tests can pin it by hash.

#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sceneseg/errors.hpp"
#include "sceneseg/image.hpp"
#include "sceneseg/model.hpp"
#include "sceneseg/text.hpp"
#include "sceneseg/windowing.hpp"

namespace sceneseg {

enum class Scheme { Comprehensive, Concise, Chapter };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Comprehensive: return "comprehensive";
    case Scheme::Concise: return "concise";
    case Scheme::Chapter: return "chapter";
  }
  return "unknown";
}

struct PromptOptions {
  int frames_per_shot = 3;  // K, 1..3
  bool include_subtitles = true;
  bool include_actors = true;
  bool include_markers = true;
  Scheme scheme = Scheme::Comprehensive;
  bool explain = false;

  bool operator==(const PromptOptions&) const = default;
};

struct ShotBlock {
  int shot_id = 0;
  std::string text;
  std::vector<RasterImage> images;  // attached in order, precede the text
};

struct Prompt {
  std::string system_text;
  std::string instruction_text;
  std::vector<ShotBlock> blocks;  // ascending shot_id, contiguous over context
  std::string scope_text;
  std::vector<int> scope;  // focus shot ids; structured metadata for mocks
  ContextWindow window;
  Scheme scheme = Scheme::Comprehensive;
  bool explain = false;
  std::string rendered_text;
  int word_count = 0;
};

// Default template, kept byte-identical to templates/prompt_template.txt
// (pinned by test).
inline const char* default_template_text() {
  return
      R"TPL([system]
You are a careful film editor's assistant. You read a movie shot by shot and judge where scenes end. A scene is a consecutive run of shots that share location, time, characters, and theme.

[instructions.comprehensive]
Below are shots {{context_first}} through {{context_last}} of a movie with {{num_shots}} shots. Each shot block lists its frames first, then its metadata. Every frame carries its shot number in the top-left corner.
Decide for each focus shot whether it is the last shot of its scene.
Reply with exactly one line per focus shot, in ascending order, formatted as:
Shot <id>: Yes
Shot <id>: No
The focus shots are {{focus_ids}}. Reply for these shots only.

[instructions.concise]
Below are shots {{context_first}} through {{context_last}} of a movie with {{num_shots}} shots. Each shot block lists its frames first, then its metadata. Every frame carries its shot number in the top-left corner.
List only the focus shots that end a scene, one line each, formatted as:
Shot <id>: Yes
The focus shots are {{focus_ids}}. If none of them ends a scene, reply with an empty message.

[instructions.chapter]
Below are shots {{context_first}} through {{context_last}} of a video with {{num_shots}} shots, each with start and end times. Divide the video into chapters.
Reply with one line per chapter, in ascending start time, formatted as:
hh:mm:ss - Title
The timestamp is the chapter start time. Keep titles short.

[instructions.explain]
After the verdict lines, add one line per Yes verdict, formatted as:
Rationale <id>: <one short sentence naming the cue for the scene change>

[shot_header]
<shot id="{{shot_id}}">

[shot_frames]
[{{frame_count}} frames attached]

[shot_subtitle]
Subtitle: {{subtitle}}

[shot_actors]
Actors: {{actors}}

[shot_time]
Time: {{start_s}}s to {{end_s}}s

[shot_footer]
</shot>

[scope]
Focus range: shots {{focus_first}} to {{focus_last}} ({{focus_ids}}).
)TPL";
}

class PromptTemplate {
 public:
  static PromptTemplate parse(const std::string& text) {
    PromptTemplate t;
    // A header is [name] where name is identifier-like; bracketed body lines
    // such as "[3 frames attached]" must stay body text.
    auto header_name = [](std::string_view line) -> std::string_view {
      if (line.size() < 3 || line.front() != '[' || line.back() != ']') return {};
      std::string_view name = line.substr(1, line.size() - 2);
      for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.')
          return {};
      return name;
    };
    std::string current;
    for (std::string_view line : split_lines(text)) {
      if (const std::string_view name = header_name(line); !name.empty()) {
        current = std::string(name);
        t.sections_[current];  // create even if empty
        continue;
      }
      if (current.empty()) {
        if (trim(line).empty()) continue;
        fail(ErrorKind::Config, "template text before first [section]");
      }
      std::string& body = t.sections_[current];
      body.append(line);
      body.push_back('\n');
    }
    static const char* required[] = {
        "system",          "instructions.comprehensive",
        "instructions.concise", "instructions.chapter",
        "instructions.explain", "shot_header",
        "shot_frames",     "shot_subtitle",
        "shot_actors",     "shot_time",
        "shot_footer",     "scope"};
    for (const char* name : required)
      if (!t.sections_.count(name))
        fail(ErrorKind::Config, std::string("template missing section [") + name + "]");
    for (auto& [name, body] : t.sections_) {
      // sections are separated by blank lines; trim the trailing ones
      while (!body.empty() && body.back() == '\n') body.pop_back();
    }
    return t;
  }

  static PromptTemplate load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open template " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  static const PromptTemplate& builtin() {
    static const PromptTemplate t = parse(default_template_text());
    return t;
  }

  const std::string& section(const std::string& name) const {
    auto it = sections_.find(name);
    if (it == sections_.end())
      fail(ErrorKind::Config, "template missing section [" + name + "]");
    return it->second;
  }

 private:
  std::map<std::string, std::string> sections_;
};

// Loads raw frames once per path and serves prepared/annotated copies.
// Optional disk cache keyed by (frame path, shot_id, marker flag).
class FrameStore {
 public:
  explicit FrameStore(std::string root, std::string disk_cache_dir = {})
      : root_(std::move(root)), cache_dir_(std::move(disk_cache_dir)) {}

  RasterImage annotated(const std::string& ref, int shot_id, bool marker) {
    if (cache_dir_.empty()) return build(ref, shot_id, marker);
    const std::string cpath =
        cache_dir_ + "/" + annotation_cache_name(ref, shot_id, marker);
    {
      std::ifstream probe(cpath, std::ios::binary);
      if (probe) return decode_ppm(probe, cpath);
    }
    RasterImage im = build(ref, shot_id, marker);
    // concurrent windows can miss on the same key; write to a private temp
    // file and rename into place so readers never see a partial PPM
    static std::atomic<unsigned> ctr{0};
    const std::string tmp = cpath + ".tmp" + std::to_string(ctr.fetch_add(1));
    save_ppm(im, tmp);
    std::error_code ec;
    std::filesystem::rename(tmp, cpath, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      fail(ErrorKind::Io, "cannot publish cache file " + cpath);
    }
    return im;
  }

  void clear() {
    std::lock_guard<std::mutex> lk(mu_);
    raw_.clear();
  }

 private:
  RasterImage build(const std::string& ref, int shot_id, bool marker) {
    const RasterImage& raw = raw_frame(ref, shot_id);
    return marker ? annotate_frame(raw, shot_id) : prepare_frame(raw);
  }

  const RasterImage& raw_frame(const std::string& ref, int shot_id) {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = raw_.find(ref);
    if (it != raw_.end()) return it->second;
    const std::string path = root_.empty() ? ref : root_ + "/" + ref;
    try {
      return raw_.emplace(ref, load_ppm(path)).first->second;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Io)
        fail(ErrorKind::MissingFrame,
             "shot " + std::to_string(shot_id) + ": " + path);
      throw;
    }
  }

  std::string root_;
  std::string cache_dir_;
  std::mutex mu_;
  std::map<std::string, RasterImage> raw_;
};

namespace detail {

inline std::string fmt_seconds(double s) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", s);
  std::string out = buf;
  while (!out.empty() && out.back() == '0') out.pop_back();
  if (!out.empty() && out.back() == '.') out.pop_back();
  return out;
}

inline std::string fmt_id_list(const std::vector<int>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(ids[i]);
  }
  return out;
}

// Evenly spaced sample of k indices over n available frames (deduplicated).
inline std::vector<int> sample_indices(int n, int k) {
  std::vector<int> out;
  if (n <= 0) return out;
  if (k >= n) {
    for (int i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  if (k == 1) {
    out.push_back((n - 1) / 2);
    return out;
  }
  int prev = -1;
  for (int i = 0; i < k; ++i) {
    int idx = static_cast<int>(
        static_cast<double>(i) * (n - 1) / (k - 1) + 0.5);
    if (idx != prev) out.push_back(idx);
    prev = idx;
  }
  return out;
}

inline int count_words(const std::string& s) {
  int n = 0;
  bool in_word = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

}  // namespace detail

inline Prompt build_prompt(const Movie& movie, const ContextWindow& w,
                           const PromptOptions& opts, const PromptTemplate& tpl,
                           FrameStore* frames = nullptr) {
  if (opts.frames_per_shot < 1 || opts.frames_per_shot > 3)
    fail(ErrorKind::Config, "frames_per_shot must be in 1..3");
  if (w.context_start < 0 || w.context_end > static_cast<int>(movie.shots.size()) ||
      w.focus_start < w.context_start || w.focus_end > w.context_end ||
      w.focus_start >= w.focus_end)
    fail(ErrorKind::Config, "window out of range for movie " + movie.movie_id);
  if (opts.scheme == Scheme::Chapter) {
    for (int i = w.context_start; i < w.context_end; ++i)
      if (!(movie.shots[i].start_s && movie.shots[i].end_s))
        fail(ErrorKind::Config,
             "chapter scheme requires timestamps on shot " + std::to_string(i));
  }

  Prompt p;
  p.window = w;
  p.scheme = opts.scheme;
  p.explain = opts.explain;
  for (int i = w.focus_start; i < w.focus_end; ++i) p.scope.push_back(i);

  const std::string focus_ids = detail::fmt_id_list(p.scope);
  auto expand = [&](std::string s) {
    replace_all(s, "{{context_first}}", std::to_string(w.context_start));
    replace_all(s, "{{context_last}}", std::to_string(w.context_end - 1));
    replace_all(s, "{{focus_first}}", std::to_string(w.focus_start));
    replace_all(s, "{{focus_last}}", std::to_string(w.focus_end - 1));
    replace_all(s, "{{focus_ids}}", focus_ids);
    replace_all(s, "{{num_shots}}", std::to_string(movie.shots.size()));
    return s;
  };

  p.system_text = expand(tpl.section("system"));
  std::string instr;
  switch (opts.scheme) {
    case Scheme::Comprehensive: instr = tpl.section("instructions.comprehensive"); break;
    case Scheme::Concise: instr = tpl.section("instructions.concise"); break;
    case Scheme::Chapter: instr = tpl.section("instructions.chapter"); break;
  }
  if (opts.explain) instr += "\n" + tpl.section("instructions.explain");
  p.instruction_text = expand(instr);
  p.scope_text = expand(tpl.section("scope"));

  for (int i = w.context_start; i < w.context_end; ++i) {
    const Shot& shot = movie.shots[i];
    ShotBlock block;
    block.shot_id = shot.shot_id;
    const std::vector<int> picks =
        detail::sample_indices(static_cast<int>(shot.frames.size()), opts.frames_per_shot);
    if (frames) {
      for (int idx : picks)
        block.images.push_back(
            frames->annotated(shot.frames[idx], shot.shot_id, opts.include_markers));
    }
    auto line = [&](const std::string& section) {
      std::string s = tpl.section(section);
      replace_all(s, "{{shot_id}}", std::to_string(shot.shot_id));
      replace_all(s, "{{frame_count}}", std::to_string(picks.size()));
      replace_all(s, "{{subtitle}}", shot.subtitle);
      replace_all(s, "{{actors}}", join(shot.actors, ", "));
      if (shot.start_s) replace_all(s, "{{start_s}}", detail::fmt_seconds(*shot.start_s));
      if (shot.end_s) replace_all(s, "{{end_s}}", detail::fmt_seconds(*shot.end_s));
      return s;
    };
    std::string text = line("shot_header");
    text += "\n" + line("shot_frames");
    if (opts.include_subtitles) text += "\n" + line("shot_subtitle");
    if (opts.include_actors) text += "\n" + line("shot_actors");
    if (shot.start_s && shot.end_s) text += "\n" + line("shot_time");
    text += "\n" + line("shot_footer");
    block.text = std::move(text);
    p.blocks.push_back(std::move(block));
  }

  std::string body;
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    if (i) body += "\n";
    body += p.blocks[i].text;
  }
  p.rendered_text =
      p.system_text + "\n\n" + p.instruction_text + "\n\n" + body + "\n\n" + p.scope_text + "\n";
  p.word_count = detail::count_words(p.rendered_text);
  return p;
}

}  // namespace sceneseg
