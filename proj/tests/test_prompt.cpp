#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "sceneseg/prompt.hpp"
#include "sceneseg/simkit.hpp"

using namespace sceneseg;

namespace {

SyntheticMovie fixture_movie(int shots = 30) {
  SyntheticConfig cfg;
  cfg.shots_per_movie = shots;
  cfg.seed = 77;
  return generate_movie(cfg, 0);
}

ContextWindow window_for(const Movie& m, int focus_start) {
  const auto ws = plan_windows(static_cast<int>(m.shots.size()), {20, 10}, m.movie_id);
  for (const ContextWindow& w : ws)
    if (w.focus_start == focus_start) return w;
  FAIL("no window at " << focus_start);
  return {};
}

}  // namespace

TEST_CASE("the shipped template file is byte-identical to the builtin", "[prompt]") {
  const char* path = std::getenv("SCENESEG_TEMPLATE");
  REQUIRE(path != nullptr);
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == default_template_text());
  // wording is part of the contract; changing it must be a conscious act
  CHECK(fnv1a64(default_template_text()) == 0xfea2bb11a4de5346ull);
  CHECK(PromptTemplate::load(path).section("shot_footer") == "</shot>");
}

TEST_CASE("template parsing requires every section", "[prompt]") {
  require_error(ErrorKind::Config, [] { PromptTemplate::parse("stray text\n[system]\nx"); });
  require_error(ErrorKind::Config, [] { PromptTemplate::parse("[system]\nonly this"); });
  const PromptTemplate& tpl = PromptTemplate::builtin();
  require_error(ErrorKind::Config, [&] { tpl.section("nonexistent"); });
  CHECK(tpl.section("shot_header") == "<shot id=\"{{shot_id}}\">");
}

TEST_CASE("blocks cover the context and placeholders expand", "[prompt]") {
  const SyntheticMovie sm = fixture_movie();
  const ContextWindow w = window_for(sm.movie, 10);  // context [5,25)
  PromptOptions opts;
  const Prompt p = build_prompt(sm.movie, w, opts, PromptTemplate::builtin());

  REQUIRE(p.blocks.size() == 20);
  for (int i = 0; i < 20; ++i) CHECK(p.blocks[i].shot_id == 5 + i);
  REQUIRE(p.scope.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(p.scope[i] == 10 + i);

  CHECK(p.blocks[0].text.find("<shot id=\"5\">") == 0);
  CHECK(p.blocks[0].text.find("[3 frames attached]") != std::string::npos);
  CHECK(p.blocks[0].text.find("Subtitle: ") != std::string::npos);
  CHECK(p.blocks[0].text.find("Actors: ") != std::string::npos);
  CHECK(p.blocks[0].text.find("Time: ") != std::string::npos);
  CHECK(p.blocks[0].text.rfind("</shot>") == p.blocks[0].text.size() - 7);

  CHECK(p.scope_text.find("shots 10 to 19") != std::string::npos);
  CHECK(p.instruction_text.find("shots 5 through 24") != std::string::npos);
  CHECK(p.instruction_text.find(std::to_string(sm.movie.shots.size()) + " shots") !=
        std::string::npos);
  CHECK(p.instruction_text.find("10, 11, 12") != std::string::npos);
  CHECK(p.rendered_text.find("{{") == std::string::npos);  // nothing left unexpanded
  CHECK(p.word_count > 100);
  CHECK(p.word_count == detail::count_words(p.rendered_text));
}

TEST_CASE("modality toggles add and remove lines", "[prompt]") {
  const SyntheticMovie sm = fixture_movie();
  const ContextWindow w = window_for(sm.movie, 10);
  PromptOptions opts;
  opts.include_subtitles = false;
  opts.include_actors = false;
  const Prompt p = build_prompt(sm.movie, w, opts, PromptTemplate::builtin());
  CHECK(p.rendered_text.find("Subtitle:") == std::string::npos);
  CHECK(p.rendered_text.find("Actors:") == std::string::npos);
  CHECK(p.rendered_text.find("Time:") != std::string::npos);

  Movie untimed = sm.movie;
  for (Shot& s : untimed.shots) {
    s.start_s.reset();
    s.end_s.reset();
  }
  PromptOptions full;
  const Prompt q = build_prompt(untimed, w, full, PromptTemplate::builtin());
  CHECK(q.rendered_text.find("Time:") == std::string::npos);
}

TEST_CASE("schemes pick their instruction block", "[prompt]") {
  const SyntheticMovie sm = fixture_movie();
  const ContextWindow w = window_for(sm.movie, 10);
  PromptOptions opts;

  const Prompt comp = build_prompt(sm.movie, w, opts, PromptTemplate::builtin());
  CHECK(comp.instruction_text.find("one line per focus shot") != std::string::npos);
  CHECK(comp.instruction_text.find("Rationale") == std::string::npos);

  opts.scheme = Scheme::Concise;
  const Prompt conc = build_prompt(sm.movie, w, opts, PromptTemplate::builtin());
  CHECK(conc.instruction_text.find("List only the focus shots") != std::string::npos);

  opts.scheme = Scheme::Comprehensive;
  opts.explain = true;
  const Prompt expl = build_prompt(sm.movie, w, opts, PromptTemplate::builtin());
  CHECK(expl.explain);
  CHECK(expl.instruction_text.find("Rationale <id>:") != std::string::npos);

  opts.explain = false;
  opts.scheme = Scheme::Chapter;
  const Prompt chap = build_prompt(sm.movie, w, opts, PromptTemplate::builtin());
  CHECK(chap.instruction_text.find("hh:mm:ss - Title") != std::string::npos);
}

TEST_CASE("chapter prompts demand timestamps", "[prompt]") {
  SyntheticMovie sm = fixture_movie();
  sm.movie.shots[7].start_s.reset();
  const ContextWindow w = window_for(sm.movie, 0);
  PromptOptions opts;
  opts.scheme = Scheme::Chapter;
  require_error(ErrorKind::Config,
                [&] { build_prompt(sm.movie, w, opts, PromptTemplate::builtin()); });
}

TEST_CASE("prompt construction is deterministic", "[prompt]") {
  const SyntheticMovie sm = fixture_movie();
  const ContextWindow w = window_for(sm.movie, 20);
  PromptOptions opts;
  const Prompt a = build_prompt(sm.movie, w, opts, PromptTemplate::builtin());
  const Prompt b = build_prompt(sm.movie, w, opts, PromptTemplate::builtin());
  CHECK(a.rendered_text == b.rendered_text);
  CHECK(a.system_text == b.system_text);
  CHECK(a.scope == b.scope);
}

TEST_CASE("bad windows and frame counts are rejected", "[prompt]") {
  const SyntheticMovie sm = fixture_movie();
  const ContextWindow w = window_for(sm.movie, 10);
  PromptOptions opts;
  opts.frames_per_shot = 0;
  require_error(ErrorKind::Config,
                [&] { build_prompt(sm.movie, w, opts, PromptTemplate::builtin()); });
  opts.frames_per_shot = 4;
  require_error(ErrorKind::Config,
                [&] { build_prompt(sm.movie, w, opts, PromptTemplate::builtin()); });

  ContextWindow oob = w;
  oob.context_end = static_cast<int>(sm.movie.shots.size()) + 5;
  require_error(ErrorKind::Config,
                [&] { build_prompt(sm.movie, oob, PromptOptions{}, PromptTemplate::builtin()); });
  ContextWindow inverted = w;
  inverted.focus_end = inverted.focus_start;
  require_error(ErrorKind::Config, [&] {
    build_prompt(sm.movie, inverted, PromptOptions{}, PromptTemplate::builtin());
  });
}

TEST_CASE("frame sampling is evenly spaced", "[prompt]") {
  using detail::sample_indices;
  CHECK(sample_indices(5, 3) == std::vector<int>{0, 2, 4});
  CHECK(sample_indices(3, 3) == std::vector<int>{0, 1, 2});
  CHECK(sample_indices(2, 3) == std::vector<int>{0, 1});
  CHECK(sample_indices(1, 3) == std::vector<int>{0});
  CHECK(sample_indices(3, 1) == std::vector<int>{1});
  CHECK(sample_indices(10, 2) == std::vector<int>{0, 9});
  CHECK(sample_indices(10, 1) == std::vector<int>{4});
  CHECK(sample_indices(0, 2).empty());
}

TEST_CASE("frame store loads, annotates, and caches", "[prompt]") {
  TempDir td("prompt_frames");
  const SyntheticMovie sm = fixture_movie(24);
  const std::string dir = write_movie_assets(sm, td.str());
  Movie movie = load_manifest(dir + "/manifest.json");

  const ContextWindow w = window_for(movie, 10);
  FrameStore store(movie.frame_root);
  PromptOptions opts;
  const Prompt p = build_prompt(movie, w, opts, PromptTemplate::builtin(), &store);
  for (const ShotBlock& b : p.blocks) {
    REQUIRE(b.images.size() == 3);
    for (const RasterImage& im : b.images) {
      CHECK(im.width == kFrameW);
      CHECK(im.height == kFrameH);
    }
    // marker box is black-or-white in the corner
    const auto* px = b.images[0].at(0, 0);
    CHECK(px[0] == px[1]);
  }

  opts.frames_per_shot = 1;
  const Prompt one = build_prompt(movie, w, opts, PromptTemplate::builtin(), &store);
  CHECK(one.blocks[0].images.size() == 1);
  // middle variant of three
  FrameStore fresh(movie.frame_root);
  CHECK(one.blocks[0].images[0] ==
        fresh.annotated(movie.shots[w.context_start].frames[1],
                        movie.shots[w.context_start].shot_id, true));

  opts.frames_per_shot = 3;
  opts.include_markers = false;
  const Prompt plain = build_prompt(movie, w, opts, PromptTemplate::builtin(), &store);
  const RasterImage raw = load_ppm(movie.frame_root + "/" + movie.shots[w.context_start].frames[0]);
  CHECK(plain.blocks[0].images[0] == prepare_frame(raw));

  // a disk cache round-trips the annotated frame exactly
  TempDir cache("prompt_cache");
  FrameStore cached(movie.frame_root, cache.str());
  const RasterImage first = cached.annotated(movie.shots[0].frames[0], 0, true);
  bool found = false;
  for (const auto& e : std::filesystem::directory_iterator(cache.path)) found |= e.is_regular_file();
  CHECK(found);
  FrameStore cached2(movie.frame_root, cache.str());
  CHECK(cached2.annotated(movie.shots[0].frames[0], 0, true) == first);
}

TEST_CASE("a missing frame names the shot", "[prompt]") {
  TempDir td("prompt_missing");
  SyntheticMovie sm = fixture_movie(24);
  const std::string dir = write_movie_assets(sm, td.str());
  Movie movie = load_manifest(dir + "/manifest.json");
  movie.shots[6].frames[0] = "frames/not_there.ppm";
  const ContextWindow w = window_for(movie, 0);
  FrameStore store(movie.frame_root);
  try {
    build_prompt(movie, w, PromptOptions{}, PromptTemplate::builtin(), &store);
    FAIL("expected MissingFrame");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingFrame);
    CHECK(std::string(e.what()).find("shot 6") != std::string::npos);
  }
}
