#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

#include "sceneseg/backend.hpp"
#include "sceneseg/errors.hpp"

// Requires that fn throws sceneseg::Error with the given kind.
template <typename Fn>
void require_error(sceneseg::ErrorKind kind, Fn&& fn) {
  try {
    fn();
    FAIL("expected an Error of kind " << sceneseg::error_kind_name(kind));
  } catch (const sceneseg::Error& e) {
    INFO(e.what());
    REQUIRE(e.kind() == kind);
  }
}

// Fresh scratch directory under the system temp root; removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("sceneseg_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string str() const { return path.string(); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Transcript where every string is one token with a boring logprob.
inline sceneseg::Transcript make_transcript(const std::vector<std::string>& tokens) {
  sceneseg::Transcript tr;
  for (const std::string& t : tokens) {
    sceneseg::TokenEvent ev;
    ev.token = t;
    ev.logprob = -0.01;
    ev.alternatives = {{t, -0.01}};
    tr.tokens.push_back(std::move(ev));
    tr.text += t;
  }
  return tr;
}

inline sceneseg::Transcript text_transcript(const std::string& text) {
  return make_transcript({text});
}
