// Command-line surface: synth, segment, chapters, evaluate, sweep,
// attention-report, validate. Single JSON config with flag overrides
// (flags > config > defaults); distinct exit codes per failure class.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sceneseg/attention.hpp"
#include "sceneseg/config.hpp"
#include "sceneseg/errors.hpp"
#include "sceneseg/http_backend.hpp"
#include "sceneseg/metrics.hpp"
#include "sceneseg/pipeline.hpp"
#include "sceneseg/simkit.hpp"

namespace fs = std::filesystem;
using namespace sceneseg;

namespace {

// 0 ok / 2 config / 3 io / 4 transport / 5 protocol / 6 evaluation / 7 data
int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Io:
    case ErrorKind::MissingFrame: return 3;
    case ErrorKind::Transport: return 4;
    case ErrorKind::Protocol:
    case ErrorKind::BudgetExceeded:
    case ErrorKind::VerdictTokenMissing:
    case ErrorKind::DegenerateProbs: return 5;
    case ErrorKind::NoPositives:
    case ErrorKind::LengthMismatch:
    case ErrorKind::EmptyPosition:
    case ErrorKind::EmptyGroundTruth:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::EmptySpanClass:
    case ErrorKind::UnknownVerdictPosition: return 6;
    default: return 7;  // schema / invariant / partition / dump problems
  }
}

PromptTemplate load_template(const RunConfig& cfg) {
  if (cfg.template_path.empty()) return PromptTemplate::builtin();
  return PromptTemplate::load(cfg.template_path);
}

void apply_env_fallbacks(RunConfig& cfg) {
  const HttpBackendConfig defaults;
  if (cfg.http.endpoint == defaults.endpoint) {
    if (const char* ep = std::getenv("SCENESEG_ENDPOINT")) cfg.http.endpoint = ep;
  }
  if (cfg.http.api_key.empty()) {
    if (const char* key = std::getenv("SCENESEG_API_KEY")) cfg.http.api_key = key;
  }
}

std::unique_ptr<Backend> make_backend(const RunConfig& cfg, const std::vector<Movie>& movies,
                                      bool need_chapters) {
  if (cfg.backend == BackendKind::Http) return std::make_unique<HttpBackend>(cfg.http);
  auto mock = std::make_unique<MockBackend>(cfg.noise);
  for (const Movie& m : movies) {
    if (need_chapters) {
      const std::string path = m.frame_root + "/chapters.json";
      if (!fs::exists(path))
        fail(ErrorKind::Config, "mock chaptering needs " + path);
      mock->register_chapters(m.movie_id, load_chapters(path));
      if (m.has_labels) mock->register_movie(m);
    } else {
      if (!m.has_labels)
        fail(ErrorKind::Config,
             "mock backend needs labeled manifests (movie " + m.movie_id + ")");
      mock->register_movie(m);
    }
  }
  return mock;
}

std::vector<Movie> load_movies(const std::vector<std::string>& manifests) {
  if (manifests.empty()) fail(ErrorKind::Config, "no manifests given");
  std::vector<Movie> movies;
  for (const std::string& path : manifests) movies.push_back(load_manifest(path));
  return movies;
}

struct DecisionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;

  double precision() const { return tp + fp > 0 ? double(tp) / (tp + fp) : 0.0; }
  double recall() const { return tp + fn > 0 ? double(tp) / (tp + fn) : 0.0; }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
  }
};

struct PairedMovie {
  Movie movie;
  MoviePrediction pred;
};

std::vector<PairedMovie> pair_predictions(const std::vector<std::string>& pred_paths,
                                          const std::vector<std::string>& manifest_paths) {
  std::map<std::string, Movie> by_id;
  for (const Movie& m : load_movies(manifest_paths)) by_id[m.movie_id] = m;
  if (pred_paths.empty()) fail(ErrorKind::Config, "no prediction dumps given");
  std::vector<PairedMovie> out;
  for (const std::string& path : pred_paths) {
    MoviePrediction pred = load_prediction(path);
    auto it = by_id.find(pred.movie_id);
    if (it == by_id.end())
      fail(ErrorKind::Invariant, "no manifest for movie " + pred.movie_id);
    if (pred.confidences.size() != it->second.shots.size())
      fail(ErrorKind::LengthMismatch,
           "dump/manifest shot counts differ for movie " + pred.movie_id);
    if (!it->second.has_labels)
      fail(ErrorKind::Invariant, "manifest for " + pred.movie_id + " is unlabeled");
    out.push_back({it->second, std::move(pred)});
  }
  return out;
}

nlohmann::json pr_points_json(const std::vector<PRPoint>& points) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PRPoint& p : points)
    arr.push_back({{"threshold", p.threshold},
                   {"precision", p.precision},
                   {"recall", p.recall},
                   {"f1", p.f1},
                   {"tp", p.tp},
                   {"fp", p.fp},
                   {"fn", p.fn}});
  return arr;
}

void write_pr_csv(const std::vector<PRPoint>& points, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "threshold,precision,recall,f1,tp,fp,fn\n";
  char buf[160];
  for (const PRPoint& p : points) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%ld,%ld,%ld\n", p.threshold,
                  p.precision, p.recall, p.f1, p.tp, p.fp, p.fn);
    out << buf;
  }
}

// Plain polyline plot of the PR curve (and F1-vs-threshold alongside).
void write_pr_svg(const std::vector<PRPoint>& points, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  const int w = 640, h = 480, m = 60;
  auto px = [&](double x) { return m + x * (w - 2 * m); };
  auto py = [&](double y) { return h - m - y * (h - 2 * m); };
  char buf[200];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"#ddd\"/>\n",
                  px(t), py(0.0), px(t), py(1.0));
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"#ddd\"/>\n",
                  px(0.0), py(t), px(1.0), py(t));
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%d\" font-size=\"12\" text-anchor=\"middle\">"
                  "%.2f</text>\n",
                  px(t), h - m + 20, t);
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%d\" y=\"%.1f\" font-size=\"12\" text-anchor=\"end\">"
                  "%.2f</text>\n",
                  m - 8, py(t) + 4, t);
    out << buf;
  }
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 15
      << "\" font-size=\"14\" text-anchor=\"middle\">recall</text>\n";
  out << "<text x=\"18\" y=\"" << h / 2
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << h / 2
      << ")\">precision</text>\n";
  std::string poly;
  for (const PRPoint& p : points) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(p.recall), py(p.precision));
    poly += buf;
  }
  out << "<polyline fill=\"none\" stroke=\"#1f6fb2\" stroke-width=\"2\" points=\"" << poly
      << "\"/>\n</svg>\n";
}

int cmd_synth(const SyntheticConfig& scfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  for (int i = 0; i < scfg.num_movies; ++i) {
    const SyntheticMovie sm = generate_movie(scfg, i);
    const std::string dir = write_movie_assets(sm, out_dir);
    long positives = 0;
    for (const Shot& s : sm.movie.shots) positives += *s.is_scene_end;
    std::printf("%s: %zu shots, %zu scenes, %ld boundaries\n", dir.c_str(),
                sm.movie.shots.size(), sm.chapters.size(), positives);
  }
  return 0;
}

int cmd_segment(RunConfig cfg) {
  validate_run_config(cfg);
  if (cfg.scheme == RunScheme::Chapter)
    fail(ErrorKind::Config, "use the chapters subcommand for the chapter scheme");
  apply_env_fallbacks(cfg);
  const PromptTemplate tpl = load_template(cfg);
  const std::vector<Movie> movies = load_movies(cfg.manifests);
  std::unique_ptr<Backend> backend = make_backend(cfg, movies, false);
  fs::create_directories(cfg.out_dir);
  if (!cfg.frame_cache_dir.empty()) fs::create_directories(cfg.frame_cache_dir);

  for (const Movie& movie : movies) {
    const SegmentOutcome out = run_segmentation(movie, *backend, cfg, tpl);
    const std::string path = cfg.out_dir + "/" + movie.movie_id + ".pred.json";
    save_prediction(out.prediction, path);
    std::printf("%s: %d windows, %zu parse failures, %lld words/window -> %s\n",
                movie.movie_id.c_str(), out.windows, out.prediction.failures.size(),
                out.windows ? out.prompt_words / out.windows : 0, path.c_str());
  }
  return 0;
}

int cmd_chapters(RunConfig cfg) {
  cfg.scheme = RunScheme::Chapter;
  validate_run_config(cfg);
  apply_env_fallbacks(cfg);
  const PromptTemplate tpl = load_template(cfg);
  const std::vector<Movie> movies = load_movies(cfg.manifests);
  std::unique_ptr<Backend> backend = make_backend(cfg, movies, true);
  fs::create_directories(cfg.out_dir);

  for (const Movie& movie : movies) {
    for (const Issue& issue : validate_movie(movie, ValidateMode::Chaptering))
      fail(ErrorKind::Invariant, movie.movie_id + ": " + issue.message);
    const ChapterOutcome out = run_chaptering(movie, *backend, cfg, tpl);
    const std::string path = cfg.out_dir + "/" + movie.movie_id + ".chapters.json";
    save_chapter_outcome(out, path);
    std::printf("%s: %zu chapters, %zu parse failures -> %s\n", movie.movie_id.c_str(),
                out.chapters.size(), out.failures.size(), path.c_str());
  }
  return 0;
}

struct EvalArgs {
  std::vector<std::string> preds;
  std::vector<std::string> manifests;
  std::vector<std::string> gt_chapters;
  std::string mode = "segmentation";
  std::string report_path;
  std::string csv_path;
  std::string svg_path;
  double threshold = 0.5;
  bool positions = false;
  std::vector<double> tolerances = {3.0, 5.0, 10.0};
};

int eval_segmentation(const EvalArgs& args, const RunConfig& cfg) {
  const std::vector<PairedMovie> paired = pair_predictions(args.preds, args.manifests);
  std::vector<double> confidences;
  std::vector<bool> labels;
  DecisionCounts counts;
  std::vector<PositionSample> samples;
  nlohmann::json per_movie = nlohmann::json::array();

  for (const PairedMovie& pm : paired) {
    const std::vector<bool> movie_labels = boundary_labels(pm.movie);
    for (size_t i = 0; i < movie_labels.size(); ++i) {
      confidences.push_back(pm.pred.confidences[i]);
      labels.push_back(movie_labels[i]);
      const bool d = pm.pred.decisions[i];
      if (d && movie_labels[i]) ++counts.tp;
      else if (d) ++counts.fp;
      else if (movie_labels[i]) ++counts.fn;
      else ++counts.tn;
    }
    const EvalReport mr = evaluate_confidences(pm.pred.confidences, movie_labels);
    per_movie.push_back({{"movie_id", pm.movie.movie_id},
                         {"ap", mr.ap},
                         {"best_f1", mr.best_f1},
                         {"best_threshold", mr.best_threshold},
                         {"parse_failures", pm.pred.failures.size()}});
    if (args.positions) {
      const auto windows =
          plan_windows(static_cast<int>(pm.movie.shots.size()), cfg.window, pm.movie.movie_id);
      for (const ContextWindow& w : windows)
        for (auto [shot, pos] : window_positions(w))
          samples.push_back({pos, pm.pred.confidences[shot], movie_labels[shot]});
    }
  }

  const EvalReport report = evaluate_confidences(confidences, labels);
  nlohmann::json j;
  j["num_shots"] = confidences.size();
  long positives = 0;
  for (bool b : labels) positives += b;
  j["num_positives"] = positives;
  j["ap"] = report.ap;
  j["best_f1"] = report.best_f1;
  j["best_threshold"] = report.best_threshold;
  j["decision_precision"] = counts.precision();
  j["decision_recall"] = counts.recall();
  j["decision_f1"] = counts.f1();
  j["per_movie"] = std::move(per_movie);
  if (args.positions) {
    auto [f1s, outliers] = per_position_f1(samples, cfg.window.focus_len, args.threshold);
    j["per_position"] = {{"f1", f1s}, {"outliers", outliers}, {"threshold", args.threshold}};
  }
  j["pr_points"] = pr_points_json(report.pr_points);

  if (!args.csv_path.empty()) write_pr_csv(report.pr_points, args.csv_path);
  if (!args.svg_path.empty()) write_pr_svg(report.pr_points, args.svg_path);
  if (!args.report_path.empty()) detail::write_json_file(j, args.report_path);
  std::printf("shots=%zu positives=%ld ap=%.6f best_f1=%.6f at %.6f decision_f1=%.6f\n",
              confidences.size(), positives, report.ap, report.best_f1,
              report.best_threshold, counts.f1());
  if (args.positions) {
    const auto& pp = j["per_position"];
    std::printf("per-position f1:");
    for (double v : pp["f1"].get<std::vector<double>>()) std::printf(" %.4f", v);
    std::printf("\noutlier positions:");
    for (int p : pp["outliers"].get<std::vector<int>>()) std::printf(" %d", p);
    std::printf("\n");
  }
  return 0;
}

int eval_chapters(const EvalArgs& args) {
  if (args.preds.size() != args.gt_chapters.size() ||
      args.preds.size() != args.manifests.size() || args.preds.empty())
    fail(ErrorKind::Config,
         "chapters mode needs parallel --pred, --gt, and --manifest lists");
  nlohmann::json per_movie = nlohmann::json::array();
  double sum_f1 = 0.0, sum_tiou = 0.0;
  for (size_t i = 0; i < args.preds.size(); ++i) {
    const std::vector<Chapter> pred = load_chapters(args.preds[i]);
    const std::vector<Chapter> gt = load_chapters(args.gt_chapters[i]);
    const Movie movie = load_manifest(args.manifests[i]);
    const Shot& last = movie.shots.back();
    if (!last.end_s)
      fail(ErrorKind::Config, "manifest " + args.manifests[i] + " lacks timestamps");
    const double f1 = chapter_f1(pred, gt, args.tolerances);
    const double ti = tiou(pred, gt, *last.end_s);
    sum_f1 += f1;
    sum_tiou += ti;
    per_movie.push_back({{"movie_id", movie.movie_id}, {"chapter_f1", f1}, {"tiou", ti}});
  }
  nlohmann::json j;
  j["chapter_f1"] = sum_f1 / args.preds.size();
  j["tiou"] = sum_tiou / args.preds.size();
  j["tolerances_s"] = args.tolerances;
  j["per_movie"] = std::move(per_movie);
  if (!args.report_path.empty()) detail::write_json_file(j, args.report_path);
  std::printf("chapter_f1=%.6f tiou=%.6f over %zu movies\n", sum_f1 / args.preds.size(),
              sum_tiou / args.preds.size(), args.preds.size());
  return 0;
}

int cmd_attention_report(const std::string& dump_path, const std::string& report_path,
                         const std::string& csv_path, const std::vector<int>& shots) {
  auto [dump, spans] = load_attention(dump_path);
  std::vector<int> queries;
  for (const auto& [shot, q] : spans.verdict_queries) queries.push_back(q);
  if (queries.empty()) fail(ErrorKind::UnknownVerdictPosition, "dump has no verdict queries");

  const ClassShares sum = modality_attention_sum(dump, spans, queries);
  const MeanShares mean = modality_attention_mean(dump, spans, queries);
  nlohmann::json j;
  j["sum"] = {{"visual", sum.visual},
              {"subtitle", sum.subtitle},
              {"actor", sum.actor},
              {"output", sum.output},
              {"other", sum.other}};
  j["mean"] = {{"visual", mean.visual},
               {"subtitle", mean.subtitle},
               {"actor", mean.actor}};
  j["mean_per_token"] = {{"visual", mean.per_token.visual},
                         {"subtitle", mean.per_token.subtitle},
                         {"actor", mean.per_token.actor}};
  if (!shots.empty()) {
    nlohmann::json per_shot = nlohmann::json::object();
    for (int s : shots) {
      nlohmann::json rows = nlohmann::json::array();
      for (const ShotAttention& row : per_shot_attention(dump, spans, s))
        rows.push_back({{"shot_id", row.shot_id},
                        {"visual", row.visual},
                        {"subtitle", row.subtitle},
                        {"actor", row.actor}});
      per_shot[std::to_string(s)] = std::move(rows);
    }
    j["per_shot"] = std::move(per_shot);
  }
  if (!report_path.empty()) detail::write_json_file(j, report_path);
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + csv_path);
    out << "aggregate,visual,subtitle,actor,output,other\n";
    char buf[200];
    std::snprintf(buf, sizeof buf, "sum,%.9g,%.9g,%.9g,%.9g,%.9g\n", sum.visual,
                  sum.subtitle, sum.actor, sum.output, sum.other);
    out << buf;
    std::snprintf(buf, sizeof buf, "mean,%.9g,%.9g,%.9g,,\n", mean.visual, mean.subtitle,
                  mean.actor);
    out << buf;
  }
  std::printf("sum: visual=%.4f subtitle=%.4f actor=%.4f output=%.4f other=%.4f\n",
              sum.visual, sum.subtitle, sum.actor, sum.output, sum.other);
  std::printf("mean: visual=%.4f subtitle=%.4f actor=%.4f\n", mean.visual, mean.subtitle,
              mean.actor);
  return 0;
}

int cmd_validate(const std::vector<std::string>& manifests, const std::string& mode,
                 const std::vector<std::string>& chapter_paths) {
  const ValidateMode vmode =
      mode == "chaptering" ? ValidateMode::Chaptering : ValidateMode::Segmentation;
  long total_issues = 0;
  for (const std::string& path : manifests) {
    const Movie movie = load_manifest(path);
    const std::vector<Issue> issues = validate_movie(movie, vmode);
    for (const Issue& issue : issues) {
      std::printf("%s: shot %d: %s (%s)\n", movie.movie_id.c_str(), issue.shot_id,
                  issue_code_name(issue.code), issue.message.c_str());
    }
    total_issues += static_cast<long>(issues.size());
    std::printf("%s: %zu shots, %zu issues\n", movie.movie_id.c_str(), movie.shots.size(),
                issues.size());
  }
  for (const std::string& path : chapter_paths) {
    const std::vector<Chapter> chapters = load_chapters(path);
    std::printf("%s: %zu chapters ok\n", path.c_str(), chapters.size());
  }
  if (total_issues > 0) fail(ErrorKind::Invariant, std::to_string(total_issues) + " issues");
  return 0;
}

std::string preparse_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

void add_run_flags(CLI::App* cmd, RunConfig& cfg, std::string& backend_str,
                   std::string& scheme_str, std::string& config_path, bool with_scheme) {
  // the config file is loaded during preparse; registering the flag here lets
  // it appear after the subcommand name
  cmd->add_option("--config", config_path, "JSON run config (flags override it)");
  cmd->add_option("--manifest", cfg.manifests, "movie manifest JSON (repeatable)");
  cmd->add_option("--out", cfg.out_dir, "output directory");
  cmd->add_option("--backend", backend_str, "mock | http");
  cmd->add_option("--endpoint", cfg.http.endpoint, "chat-completions endpoint URL");
  cmd->add_option("--model", cfg.http.model, "model name sent to the server");
  if (with_scheme)
    cmd->add_option("--scheme", scheme_str,
                    "comprehensive | concise | concise_sampling");
  cmd->add_option("--context-len", cfg.window.context_len, "context window N");
  cmd->add_option("--focus-len", cfg.window.focus_len, "focus window F");
  cmd->add_option("--frames-per-shot", cfg.prompt.frames_per_shot, "K in 1..3");
  cmd->add_flag("--subtitles,!--no-subtitles", cfg.prompt.include_subtitles,
                "include subtitle lines");
  cmd->add_flag("--actors,!--no-actors", cfg.prompt.include_actors, "include actor lines");
  cmd->add_flag("--markers,!--no-markers", cfg.prompt.include_markers,
                "overlay shot-ID markers");
  cmd->add_flag("--explain", cfg.prompt.explain, "request per-boundary rationales");
  cmd->add_option("--temperature", cfg.decode.temperature, "sampling temperature");
  cmd->add_option("--max-new-tokens", cfg.decode.max_new_tokens, "generation budget");
  cmd->add_option("--top-logprobs", cfg.decode.top_logprobs_k, "alternatives per token");
  cmd->add_option("--sampling-runs", cfg.sampling_runs, "m for concise_sampling");
  cmd->add_option("--concurrency", cfg.concurrency, "max in-flight windows");
  cmd->add_option("--seed", cfg.seed, "run seed");
  cmd->add_option("--p-flip", cfg.noise.p_flip, "mock flip probability");
  cmd->add_option("--edge-margin", cfg.noise.edge.margin, "mock edge margin m*");
  cmd->add_option("--edge-extra", cfg.noise.edge.extra_flip, "mock edge extra flip");
  cmd->add_option("--noise-seed", cfg.noise.seed, "mock noise seed");
  cmd->add_option("--template", cfg.template_path, "prompt template file");
  cmd->add_option("--frame-cache", cfg.frame_cache_dir, "annotated-frame cache dir");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"context-focus scene segmentation pipeline"};
  app.require_subcommand(1);
  std::string config_path_opt;
  app.add_option("--config", config_path_opt, "JSON run config (flags override it)");

  RunConfig cfg;
  const std::string config_path = preparse_config_path(argc, argv);
  try {
    if (!config_path.empty()) cfg = load_run_config(config_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", e.kind_name(), e.what());
    return exit_code_for(e.kind());
  }
  std::string backend_str, scheme_str;

  SyntheticConfig scfg;
  std::string synth_out = "synth_out";
  auto* synth = app.add_subcommand("synth", "generate synthetic labeled movies");
  synth->add_option("--out", synth_out, "output root directory");
  synth->add_option("--movies", scfg.num_movies, "number of movies");
  synth->add_option("--shots", scfg.shots_per_movie, "shots per movie");
  synth->add_option("--scene-min", scfg.scene_len_min, "min scene length");
  synth->add_option("--scene-max", scfg.scene_len_max, "max scene length");
  synth->add_option("--topics", scfg.topic_vocab, "topic vocabulary size");
  synth->add_option("--actor-vocab", scfg.actor_vocab, "actor vocabulary size");
  synth->add_option("--seed", scfg.seed, "generator seed");

  auto* segment = app.add_subcommand("segment", "run boundary inference, write dumps");
  add_run_flags(segment, cfg, backend_str, scheme_str, config_path_opt, true);

  auto* chapters = app.add_subcommand("chapters", "run chaptering, write chapter dumps");
  add_run_flags(chapters, cfg, backend_str, scheme_str, config_path_opt, false);

  EvalArgs eargs;
  auto* evaluate = app.add_subcommand("evaluate", "score dumps against ground truth");
  evaluate->add_option("--config", config_path_opt, "JSON run config (flags override it)");
  evaluate->add_option("--pred", eargs.preds, "prediction dump(s)");
  evaluate->add_option("--manifest", eargs.manifests, "labeled manifest(s)");
  evaluate->add_option("--mode", eargs.mode, "segmentation | chapters");
  evaluate->add_option("--gt", eargs.gt_chapters, "ground-truth chapter file(s)");
  evaluate->add_option("--report", eargs.report_path, "JSON report path");
  evaluate->add_option("--csv", eargs.csv_path, "PR curve CSV path");
  evaluate->add_option("--svg", eargs.svg_path, "PR curve SVG path");
  evaluate->add_option("--threshold", eargs.threshold, "per-position decision threshold");
  evaluate->add_flag("--positions", eargs.positions, "report per-position F1 + outliers");
  evaluate->add_option("--tolerances", eargs.tolerances, "chapter matching tolerances (s)");
  evaluate->add_option("--context-len", cfg.window.context_len, "context window N");
  evaluate->add_option("--focus-len", cfg.window.focus_len, "focus window F");

  EvalArgs sargs;
  auto* sweep = app.add_subcommand("sweep", "threshold sweep with CSV/SVG curve output");
  sweep->add_option("--config", config_path_opt, "JSON run config (flags override it)");
  sweep->add_option("--pred", sargs.preds, "prediction dump(s)");
  sweep->add_option("--manifest", sargs.manifests, "labeled manifest(s)");
  sweep->add_option("--report", sargs.report_path, "JSON report path");
  sweep->add_option("--csv", sargs.csv_path, "PR curve CSV path");
  sweep->add_option("--svg", sargs.svg_path, "PR curve SVG path");
  sweep->add_option("--context-len", cfg.window.context_len, "context window N");
  sweep->add_option("--focus-len", cfg.window.focus_len, "focus window F");

  std::string dump_path, att_report, att_csv;
  std::vector<int> att_shots;
  auto* attn = app.add_subcommand("attention-report", "modality attention shares");
  attn->add_option("--dump", dump_path, "attention dump file")->required();
  attn->add_option("--report", att_report, "JSON report path");
  attn->add_option("--csv", att_csv, "CSV shares path");
  attn->add_option("--shot", att_shots, "per-shot rows for these shot ids");

  std::vector<std::string> val_manifests, val_chapters;
  std::string val_mode = "segmentation";
  auto* validate = app.add_subcommand("validate", "check manifests and chapter files");
  validate->add_option("--manifest", val_manifests, "manifest(s) to check");
  validate->add_option("--mode", val_mode, "segmentation | chaptering");
  validate->add_option("--chapters", val_chapters, "chapter file(s) to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!backend_str.empty()) {
      if (backend_str == "mock") cfg.backend = BackendKind::Mock;
      else if (backend_str == "http") cfg.backend = BackendKind::Http;
      else fail(ErrorKind::Config, "unknown backend '" + backend_str + "'");
    }
    if (!scheme_str.empty()) cfg.scheme = run_scheme_from(scheme_str);

    if (synth->parsed()) return cmd_synth(scfg, synth_out);
    if (segment->parsed()) return cmd_segment(cfg);
    if (chapters->parsed()) return cmd_chapters(cfg);
    if (evaluate->parsed())
      return eargs.mode == "chapters" ? eval_chapters(eargs) : eval_segmentation(eargs, cfg);
    if (sweep->parsed()) {
      if (sargs.csv_path.empty() && sargs.svg_path.empty() && sargs.report_path.empty())
        fail(ErrorKind::Config, "sweep needs --csv, --svg, or --report");
      return eval_segmentation(sargs, cfg);
    }
    if (attn->parsed()) return cmd_attention_report(dump_path, att_report, att_csv, att_shots);
    if (validate->parsed()) return cmd_validate(val_manifests, val_mode, val_chapters);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", e.kind_name(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
