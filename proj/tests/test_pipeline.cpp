#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "sceneseg/metrics.hpp"
#include "sceneseg/pipeline.hpp"
#include "sceneseg/simkit.hpp"

using namespace sceneseg;

namespace {

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct DiskMovie {
  TempDir td;
  SyntheticMovie sm;
  Movie movie;

  DiskMovie(int shots, std::uint64_t seed, const char* tag)
      : td(tag) {
    SyntheticConfig cfg;
    cfg.shots_per_movie = shots;
    cfg.seed = seed;
    sm = generate_movie(cfg, 0);
    movie = load_manifest(write_movie_assets(sm, td.str()) + "/manifest.json");
  }
};

struct RecordingBackend : Backend {
  Backend& inner;
  std::mutex mu;
  std::vector<DecodeParams> seen;
  std::vector<int> focus_starts;

  explicit RecordingBackend(Backend& b) : inner(b) {}
  Transcript generate(const Prompt& p, const DecodeParams& d) override {
    {
      std::lock_guard<std::mutex> lk(mu);
      seen.push_back(d);
      focus_starts.push_back(p.window.focus_start);
    }
    return inner.generate(p, d);
  }
};

// Forwards to the mock but deletes one shot's verdict line from the reply.
struct DropBackend : Backend {
  Backend& inner;
  int target;

  DropBackend(Backend& b, int shot_id) : inner(b), target(shot_id) {}
  Transcript generate(const Prompt& p, const DecodeParams& d) override {
    Transcript tr = inner.generate(p, d);
    const std::string want = " " + std::to_string(target);
    for (size_t i = 0; i + 4 < tr.tokens.size(); ++i)
      if (tr.tokens[i].token == "Shot" && tr.tokens[i + 1].token == want) {
        tr.tokens.erase(tr.tokens.begin() + i, tr.tokens.begin() + i + 5);
        break;
      }
    tr.text.clear();
    for (const TokenEvent& t : tr.tokens) tr.text += t.token;
    return tr;
  }
};

struct ThrowingBackend : Backend {
  Backend& inner;

  explicit ThrowingBackend(Backend& b) : inner(b) {}
  Transcript generate(const Prompt& p, const DecodeParams& d) override {
    if (p.window.focus_start == 20) fail(ErrorKind::Transport, "socket reset");
    if (p.window.focus_start == 40) fail(ErrorKind::Protocol, "mangled reply");
    return inner.generate(p, d);
  }
};

RunConfig base_config() {
  RunConfig cfg;
  cfg.window = {20, 10};
  cfg.concurrency = 3;
  return cfg;
}

}  // namespace

TEST_CASE("noise-free segmentation recovers the labels end to end", "[pipeline]") {
  DiskMovie dm(60, 41, "pipe_e2e");
  MockBackend backend;
  backend.register_synthetic(dm.sm);
  const RunConfig cfg = base_config();

  const SegmentOutcome out =
      run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());
  CHECK(out.windows == 6);
  CHECK(out.prompt_words > 0);
  CHECK(out.prediction.movie_id == dm.movie.movie_id);
  CHECK(out.prediction.scheme == "comprehensive");
  CHECK(out.prediction.failures.empty());

  const std::vector<bool> labels = boundary_labels(dm.movie);
  REQUIRE(out.prediction.decisions.size() == labels.size());
  CHECK(out.prediction.decisions == labels);
  for (VerdictQuality q : out.prediction.qualities) CHECK(q == VerdictQuality::Ok);
  for (size_t i = 0; i < labels.size(); ++i)
    CHECK((out.prediction.confidences[i] > 0.5) == labels[i]);

  const EvalReport report = evaluate_confidences(out.prediction.confidences, labels);
  CHECK(report.ap == 1.0);
  CHECK(report.best_f1 == 1.0);
}

TEST_CASE("concurrency cannot change a single output byte", "[pipeline]") {
  DiskMovie dm(60, 42, "pipe_conc");
  MockBackend backend;
  backend.register_synthetic(dm.sm);
  RunConfig cfg = base_config();
  cfg.noise.p_flip = 0.3;  // plenty of parse traffic
  cfg.noise.seed = 5;

  cfg.concurrency = 1;
  MockBackend b1(cfg.noise);
  b1.register_synthetic(dm.sm);
  const auto serial = run_segmentation(dm.movie, b1, cfg, PromptTemplate::builtin());

  cfg.concurrency = 7;
  MockBackend b7(cfg.noise);
  b7.register_synthetic(dm.sm);
  const auto parallel = run_segmentation(dm.movie, b7, cfg, PromptTemplate::builtin());

  CHECK(prediction_to_json(serial.prediction).dump(2) ==
        prediction_to_json(parallel.prediction).dump(2));
}

TEST_CASE("concise agrees with comprehensive when the mock is noise free",
          "[pipeline]") {
  DiskMovie dm(40, 43, "pipe_concise");
  MockBackend backend;
  backend.register_synthetic(dm.sm);
  RunConfig cfg = base_config();

  const auto comp = run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());
  cfg.scheme = RunScheme::Concise;
  const auto conc = run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());

  CHECK(conc.prediction.scheme == "concise");
  CHECK(conc.prediction.decisions == comp.prediction.decisions);
  const std::vector<bool> labels = boundary_labels(dm.movie);
  for (size_t i = 0; i < labels.size(); ++i)
    CHECK(conc.prediction.confidences[i] == (labels[i] ? 1.0 : 0.0));
}

TEST_CASE("repeated sampling folds runs into vote fractions", "[pipeline]") {
  DiskMovie dm(40, 44, "pipe_sampling");
  MockBackend backend;
  backend.register_synthetic(dm.sm);
  RunConfig cfg = base_config();
  cfg.scheme = RunScheme::ConciseSampling;
  cfg.sampling_runs = 3;
  cfg.seed = 9;

  const auto out = run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());
  const std::vector<bool> labels = boundary_labels(dm.movie);
  CHECK(out.prediction.decisions == labels);
  for (size_t i = 0; i < labels.size(); ++i)
    CHECK(out.prediction.confidences[i] == (labels[i] ? 1.0 : 0.0));
  CHECK(out.prediction.failures.empty());
}

TEST_CASE("a dropped verdict line defaults its shot and records the miss",
          "[pipeline]") {
  DiskMovie dm(60, 45, "pipe_drop");
  MockBackend mock;
  mock.register_synthetic(dm.sm);
  DropBackend backend(mock, 23);
  const RunConfig cfg = base_config();

  const auto out = run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());
  CHECK(out.prediction.qualities[23] == VerdictQuality::Defaulted);
  CHECK(out.prediction.confidences[23] == 0.0);
  CHECK(out.prediction.decisions[23] == false);
  REQUIRE(out.prediction.failures.size() == 1);
  CHECK(out.prediction.failures[0].reason == FailReason::Missing);
  CHECK(out.prediction.failures[0].shot_id == 23);
  CHECK(out.prediction.failures[0].window_index == 2);

  const std::vector<bool> labels = boundary_labels(dm.movie);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (i == 23) continue;
    CHECK(out.prediction.qualities[i] == VerdictQuality::Ok);
    CHECK(out.prediction.decisions[i] == labels[i]);
  }
}

TEST_CASE("the lowest failing window index decides the surfaced error",
          "[pipeline]") {
  DiskMovie dm(60, 46, "pipe_throw");
  MockBackend mock;
  mock.register_synthetic(dm.sm);
  ThrowingBackend backend(mock);
  RunConfig cfg = base_config();
  cfg.concurrency = 5;

  require_error(ErrorKind::Transport, [&] {
    run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());
  });
}

TEST_CASE("scheme chooses the decode temperature", "[pipeline]") {
  DiskMovie dm(40, 47, "pipe_params");
  MockBackend mock;
  mock.register_synthetic(dm.sm);
  RunConfig cfg = base_config();
  cfg.concurrency = 1;
  cfg.decode.temperature = 0.9;

  SECTION("comprehensive decodes greedily regardless of the config") {
    RecordingBackend backend(mock);
    run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());
    REQUIRE(backend.seen.size() == 4);
    for (const DecodeParams& p : backend.seen) {
      CHECK(p.temperature == 0.0);
      CHECK_FALSE(p.seed.has_value());
    }
  }

  SECTION("concise keeps the configured temperature") {
    cfg.scheme = RunScheme::Concise;
    RecordingBackend backend(mock);
    run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());
    REQUIRE(backend.seen.size() == 4);
    for (const DecodeParams& p : backend.seen) CHECK(p.temperature == 0.9);
  }

  SECTION("sampling draws per-run temperatures and distinct seeds") {
    cfg.scheme = RunScheme::ConciseSampling;
    cfg.sampling_runs = 3;
    RecordingBackend backend(mock);
    run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());
    REQUIRE(backend.seen.size() == 12);
    for (size_t w = 0; w < 4; ++w) {
      std::vector<std::int64_t> seeds;
      for (size_t r = 0; r < 3; ++r) {
        const DecodeParams& p = backend.seen[3 * w + r];
        CHECK(backend.focus_starts[3 * w + r] == static_cast<int>(10 * w));
        CHECK(p.temperature >= 0.5);
        CHECK(p.temperature < 1.0);
        REQUIRE(p.seed.has_value());
        seeds.push_back(*p.seed);
      }
      std::sort(seeds.begin(), seeds.end());
      CHECK(std::adjacent_find(seeds.begin(), seeds.end()) == seeds.end());
    }
  }
}

TEST_CASE("chaptering reproduces the scripted chapter list", "[pipeline]") {
  DiskMovie dm(40, 48, "pipe_chap");
  MockBackend backend;
  backend.register_synthetic(dm.sm);
  RunConfig cfg = base_config();

  const ChapterOutcome out =
      run_chaptering(dm.movie, backend, cfg, PromptTemplate::builtin());
  CHECK(out.movie_id == dm.movie.movie_id);
  CHECK(out.failures.empty());
  REQUIRE(out.chapters.size() == dm.sm.chapters.size());
  for (size_t i = 0; i < out.chapters.size(); ++i) {
    CHECK(out.chapters[i].start_s == dm.sm.chapters[i].start_s);
    CHECK(out.chapters[i].title == dm.sm.chapters[i].title);
  }

  const std::string path = dm.td.file("chapters.json");
  save_chapter_outcome(out, path);
  const nlohmann::json j = detail::parse_json_file(path);
  CHECK(j["movie_id"] == dm.movie.movie_id);
  CHECK(j["failures"].empty());
  REQUIRE(j["chapters"].size() == out.chapters.size());
  CHECK(j["chapters"][0]["start_s"] == out.chapters[0].start_s);
  CHECK(j["chapters"][0]["title"] == out.chapters[0].title);
}

TEST_CASE("the annotated-frame cache is deterministic on disk", "[pipeline]") {
  DiskMovie dm(30, 49, "pipe_cache");
  MockBackend backend;
  backend.register_synthetic(dm.sm);
  RunConfig cfg = base_config();
  cfg.frame_cache_dir = dm.td.file("cache");
  std::filesystem::create_directories(cfg.frame_cache_dir);

  const auto first = run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());

  std::map<std::string, std::string> cached;
  for (const auto& entry : std::filesystem::directory_iterator(cfg.frame_cache_dir)) {
    const std::string name = entry.path().filename().string();
    REQUIRE(name.size() == 20);  // 16 hex chars + ".ppm"
    CHECK(name.substr(16) == ".ppm");
    CHECK(name.find_first_not_of("0123456789abcdef") == 16);
    cached[name] = file_bytes(entry.path().string());
  }
  CHECK_FALSE(cached.empty());

  const auto second = run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());
  CHECK(prediction_to_json(first.prediction).dump(2) ==
        prediction_to_json(second.prediction).dump(2));
  size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(cfg.frame_cache_dir)) {
    const std::string name = entry.path().filename().string();
    REQUIRE(cached.count(name) == 1);
    CHECK(cached[name] == file_bytes(entry.path().string()));
    ++seen;
  }
  CHECK(seen == cached.size());
}

TEST_CASE("chapter scheme is rejected by the segmentation entry point",
          "[pipeline]") {
  DiskMovie dm(20, 50, "pipe_badscheme");
  MockBackend backend;
  backend.register_synthetic(dm.sm);
  RunConfig cfg = base_config();
  cfg.scheme = RunScheme::Chapter;
  require_error(ErrorKind::Config, [&] {
    run_segmentation(dm.movie, backend, cfg, PromptTemplate::builtin());
  });
}
