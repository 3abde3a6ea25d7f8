#pragma once

// Offline attention-share analysis over serialized dumps: class-level
// sums, length-normalized means (output tokens excluded), and per-shot
// distributions for verdict queries.
//
// Dump file layout: "SVAT" magic, uint32 LE header length, JSON header
// (dims + spans + verdict query positions), then row-major float32 LE
// weights indexed [layer][head][query][key].

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sceneseg/errors.hpp"

namespace sceneseg {

enum class SpanClass { Visual, Subtitle, Actor, Output, Other };

inline const char* span_class_name(SpanClass c) {
  switch (c) {
    case SpanClass::Visual: return "visual";
    case SpanClass::Subtitle: return "subtitle";
    case SpanClass::Actor: return "actor";
    case SpanClass::Output: return "output";
    case SpanClass::Other: return "other";
  }
  return "unknown";
}

inline SpanClass span_class_from(const std::string& s) {
  if (s == "visual") return SpanClass::Visual;
  if (s == "subtitle") return SpanClass::Subtitle;
  if (s == "actor") return SpanClass::Actor;
  if (s == "output") return SpanClass::Output;
  if (s == "other") return SpanClass::Other;
  fail(ErrorKind::Schema, "unknown span class '" + s + "'");
}

struct Span {
  int begin = 0;  // key-token range [begin, end)
  int end = 0;
  SpanClass cls = SpanClass::Other;
  int shot_id = -1;  // meaningful for the per-shot modality classes
};

struct SpanMap {
  std::vector<Span> spans;
  std::map<int, int> verdict_queries;  // shot_id -> query position
};

struct AttentionDump {
  int layers = 0, heads = 0, queries = 0, keys = 0;
  std::vector<float> weights;  // [l][h][q][k] row-major

  size_t index(int l, int h, int q, int k) const {
    return ((static_cast<size_t>(l) * heads + h) * queries + q) * keys + k;
  }
  float at(int l, int h, int q, int k) const { return weights[index(l, h, q, k)]; }
};

inline void validate_span_map(const SpanMap& m, int keys) {
  std::vector<std::pair<int, int>> ranges;
  for (const Span& s : m.spans) {
    if (s.begin < 0 || s.end > keys || s.begin >= s.end)
      fail(ErrorKind::Schema, "span range out of bounds");
    ranges.emplace_back(s.begin, s.end);
  }
  std::sort(ranges.begin(), ranges.end());
  for (size_t i = 1; i < ranges.size(); ++i)
    if (ranges[i].first < ranges[i - 1].second)
      fail(ErrorKind::Schema, "span ranges overlap");
}

inline void validate_dump(const AttentionDump& d) {
  if (d.layers < 1 || d.heads < 1 || d.queries < 1 || d.keys < 1)
    fail(ErrorKind::Schema, "attention dims must be positive");
  const size_t expect = static_cast<size_t>(d.layers) * d.heads * d.queries * d.keys;
  if (d.weights.size() != expect)
    fail(ErrorKind::Schema, "attention payload size mismatch");
  for (int l = 0; l < d.layers; ++l)
    for (int h = 0; h < d.heads; ++h)
      for (int q = 0; q < d.queries; ++q) {
        double sum = 0.0;
        for (int k = 0; k < d.keys; ++k) {
          const float w = d.at(l, h, q, k);
          if (w < 0.0f) fail(ErrorKind::Invariant, "negative attention weight");
          sum += w;
        }
        if (std::fabs(sum - 1.0) > 1e-4)
          fail(ErrorKind::Invariant, "attention row not normalized at (" +
                                         std::to_string(l) + "," + std::to_string(h) + "," +
                                         std::to_string(q) + ")");
      }
}

inline void save_attention(const AttentionDump& d, const SpanMap& m, const std::string& path) {
  nlohmann::json header;
  header["layers"] = d.layers;
  header["heads"] = d.heads;
  header["queries"] = d.queries;
  header["keys"] = d.keys;
  nlohmann::json spans = nlohmann::json::array();
  for (const Span& s : m.spans) {
    nlohmann::json js;
    js["begin"] = s.begin;
    js["end"] = s.end;
    js["class"] = span_class_name(s.cls);
    js["shot_id"] = s.shot_id;
    spans.push_back(std::move(js));
  }
  header["spans"] = std::move(spans);
  nlohmann::json vq = nlohmann::json::object();
  for (const auto& [shot, q] : m.verdict_queries) vq[std::to_string(shot)] = q;
  header["verdict_queries"] = std::move(vq);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  const std::string hs = header.dump();
  const std::uint32_t len = static_cast<std::uint32_t>(hs.size());
  std::uint8_t len_le[4] = {static_cast<std::uint8_t>(len & 0xff),
                            static_cast<std::uint8_t>((len >> 8) & 0xff),
                            static_cast<std::uint8_t>((len >> 16) & 0xff),
                            static_cast<std::uint8_t>((len >> 24) & 0xff)};
  out.write("SVAT", 4);
  out.write(reinterpret_cast<const char*>(len_le), 4);
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  out.write(reinterpret_cast<const char*>(d.weights.data()),
            static_cast<std::streamsize>(d.weights.size() * sizeof(float)));
  if (!out) fail(ErrorKind::Io, "short write to " + path);
}

inline std::pair<AttentionDump, SpanMap> load_attention(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "SVAT", 4) != 0)
    fail(ErrorKind::Schema, "not an attention dump: " + path);
  std::uint8_t len_le[4];
  in.read(reinterpret_cast<char*>(len_le), 4);
  if (in.gcount() != 4) fail(ErrorKind::Schema, "truncated header length");
  const std::uint32_t len = static_cast<std::uint32_t>(len_le[0]) |
                            (static_cast<std::uint32_t>(len_le[1]) << 8) |
                            (static_cast<std::uint32_t>(len_le[2]) << 16) |
                            (static_cast<std::uint32_t>(len_le[3]) << 24);
  if (len > (1u << 24)) fail(ErrorKind::Schema, "oversized header");
  std::string hs(len, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(len));
  if (static_cast<std::uint32_t>(in.gcount()) != len)
    fail(ErrorKind::Schema, "truncated header");
  nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
  if (header.is_discarded()) fail(ErrorKind::Schema, "invalid header JSON");

  AttentionDump d;
  SpanMap m;
  try {
    d.layers = header.at("layers").get<int>();
    d.heads = header.at("heads").get<int>();
    d.queries = header.at("queries").get<int>();
    d.keys = header.at("keys").get<int>();
    for (const auto& js : header.at("spans")) {
      Span s;
      s.begin = js.at("begin").get<int>();
      s.end = js.at("end").get<int>();
      s.cls = span_class_from(js.at("class").get<std::string>());
      s.shot_id = js.at("shot_id").get<int>();
      m.spans.push_back(s);
    }
    for (const auto& [key, val] : header.at("verdict_queries").items())
      m.verdict_queries[std::stoi(key)] = val.get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Schema, std::string("bad attention header: ") + e.what());
  } catch (const std::exception&) {
    fail(ErrorKind::Schema, "bad attention header");
  }
  if (d.layers < 1 || d.heads < 1 || d.queries < 1 || d.keys < 1 ||
      static_cast<long long>(d.layers) * d.heads * d.queries * d.keys > (1ll << 28))
    fail(ErrorKind::Schema, "unreasonable attention dims");

  const size_t n = static_cast<size_t>(d.layers) * d.heads * d.queries * d.keys;
  d.weights.resize(n);
  in.read(reinterpret_cast<char*>(d.weights.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<size_t>(in.gcount()) != n * sizeof(float))
    fail(ErrorKind::Schema, "truncated attention payload");
  validate_dump(d);
  validate_span_map(m, d.keys);
  return {std::move(d), std::move(m)};
}

struct ClassShares {
  double visual = 0.0, subtitle = 0.0, actor = 0.0, output = 0.0, other = 0.0;

  double& of(SpanClass c) {
    switch (c) {
      case SpanClass::Visual: return visual;
      case SpanClass::Subtitle: return subtitle;
      case SpanClass::Actor: return actor;
      case SpanClass::Output: return output;
      case SpanClass::Other: return other;
    }
    return other;
  }
};

namespace detail {

inline void check_queries(const AttentionDump& d, const std::vector<int>& queries) {
  if (queries.empty()) fail(ErrorKind::Config, "query set must be non-empty");
  for (int q : queries)
    if (q < 0 || q >= d.queries)
      fail(ErrorKind::DimensionMismatch, "query position out of range");
}

// Mean over layers, heads, and the query set of the attention mass a
// query puts on [begin, end).
inline double span_mass(const AttentionDump& d, const std::vector<int>& queries,
                        int begin, int end) {
  double acc = 0.0;
  for (int l = 0; l < d.layers; ++l)
    for (int h = 0; h < d.heads; ++h)
      for (int q : queries) {
        const float* row = d.weights.data() + d.index(l, h, q, 0);
        double s = 0.0;
        for (int k = begin; k < end; ++k) s += row[k];
        acc += s;
      }
  return acc / (static_cast<double>(d.layers) * d.heads * queries.size());
}

}  // namespace detail

// Summed attention share per class (Visual/Subtitle/Actor/Output/Other),
// averaged over layers, heads, and the given queries.
inline ClassShares modality_attention_sum(const AttentionDump& d, const SpanMap& m,
                                          const std::vector<int>& queries) {
  detail::check_queries(d, queries);
  validate_span_map(m, d.keys);
  ClassShares shares;
  for (const Span& s : m.spans)
    shares.of(s.cls) += detail::span_mass(d, queries, s.begin, s.end);
  return shares;
}

struct MeanShares {
  ClassShares per_token;                        // raw per-token means, before renormalizing
  double visual = 0.0, subtitle = 0.0, actor = 0.0;  // shares over the three input modalities
};

// Length-normalized mean attention per class; OUTPUT (and OTHER) tokens
// are excluded from the normalization, and the three input modalities
// are renormalized into shares.
inline MeanShares modality_attention_mean(const AttentionDump& d, const SpanMap& m,
                                          const std::vector<int>& queries) {
  detail::check_queries(d, queries);
  validate_span_map(m, d.keys);
  double mass[3] = {0, 0, 0};
  long count[3] = {0, 0, 0};
  MeanShares out;
  for (const Span& s : m.spans) {
    const double v = detail::span_mass(d, queries, s.begin, s.end);
    out.per_token.of(s.cls) += v;
    int idx = -1;
    if (s.cls == SpanClass::Visual) idx = 0;
    else if (s.cls == SpanClass::Subtitle) idx = 1;
    else if (s.cls == SpanClass::Actor) idx = 2;
    if (idx >= 0) {
      mass[idx] += v;
      count[idx] += s.end - s.begin;
    }
  }
  for (int i = 0; i < 3; ++i)
    if (count[i] == 0)
      fail(ErrorKind::EmptySpanClass,
           std::string("no tokens labeled ") +
               span_class_name(i == 0 ? SpanClass::Visual
                                      : i == 1 ? SpanClass::Subtitle : SpanClass::Actor));
  const double per_tok[3] = {mass[0] / count[0], mass[1] / count[1], mass[2] / count[2]};
  out.per_token.visual = per_tok[0];
  out.per_token.subtitle = per_tok[1];
  out.per_token.actor = per_tok[2];
  const double total = per_tok[0] + per_tok[1] + per_tok[2];
  if (total > 0) {
    out.visual = per_tok[0] / total;
    out.subtitle = per_tok[1] / total;
    out.actor = per_tok[2] / total;
  }
  return out;
}

struct ShotAttention {
  int shot_id = -1;
  double visual = 0.0, subtitle = 0.0, actor = 0.0;

  double total() const { return visual + subtitle + actor; }
};

// Attention the verdict query of `shot_id` pays to each input shot,
// split by modality; averaged over layers and heads.
inline std::vector<ShotAttention> per_shot_attention(const AttentionDump& d, const SpanMap& m,
                                                     int shot_id) {
  auto it = m.verdict_queries.find(shot_id);
  if (it == m.verdict_queries.end())
    fail(ErrorKind::UnknownVerdictPosition,
         "no verdict query recorded for shot " + std::to_string(shot_id));
  const std::vector<int> queries = {it->second};
  detail::check_queries(d, queries);
  validate_span_map(m, d.keys);

  std::map<int, ShotAttention> rows;
  for (const Span& s : m.spans) {
    if (s.cls != SpanClass::Visual && s.cls != SpanClass::Subtitle &&
        s.cls != SpanClass::Actor)
      continue;
    ShotAttention& row = rows[s.shot_id];
    row.shot_id = s.shot_id;
    const double v = detail::span_mass(d, queries, s.begin, s.end);
    if (s.cls == SpanClass::Visual) row.visual += v;
    else if (s.cls == SpanClass::Subtitle) row.subtitle += v;
    else row.actor += v;
  }
  std::vector<ShotAttention> out;
  for (const auto& [id, row] : rows) out.push_back(row);
  return out;
}

}  // namespace sceneseg
