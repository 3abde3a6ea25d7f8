#pragma once

// Model-backend abstraction: generate() returns the full text plus
// per-token log-probabilities with top-k alternatives.

#include <optional>
#include <string>
#include <vector>

#include "sceneseg/errors.hpp"
#include "sceneseg/prompt.hpp"

namespace sceneseg {

struct DecodeParams {
  double temperature = 0.0;
  int max_new_tokens = 1024;
  int top_logprobs_k = 5;  // 1..20
  std::optional<std::int64_t> seed;

  bool operator==(const DecodeParams&) const = default;
};

inline void validate_decode_params(const DecodeParams& p) {
  if (p.temperature < 0) fail(ErrorKind::Config, "temperature must be >= 0");
  if (p.max_new_tokens < 1) fail(ErrorKind::Config, "max_new_tokens must be >= 1");
  if (p.top_logprobs_k < 1 || p.top_logprobs_k > 20)
    fail(ErrorKind::Config, "top_logprobs_k must be in 1..20");
}

struct TokenAlt {
  std::string token;
  double logprob = 0.0;

  bool operator==(const TokenAlt&) const = default;
};

struct TokenEvent {
  std::string token;
  double logprob = 0.0;
  std::vector<TokenAlt> alternatives;  // sorted by logprob descending

  bool operator==(const TokenEvent&) const = default;
};

struct Transcript {
  std::string text;
  std::vector<TokenEvent> tokens;

  bool operator==(const Transcript&) const = default;
};

// Shared response validation: token concatenation must reproduce the text
// and alternatives must be ordered. Both backends run this.
inline void check_transcript(const Transcript& t) {
  std::string joined;
  for (const TokenEvent& ev : t.tokens) joined += ev.token;
  if (joined != t.text)
    fail(ErrorKind::Protocol, "token concatenation does not reproduce text");
  for (const TokenEvent& ev : t.tokens) {
    for (size_t i = 1; i < ev.alternatives.size(); ++i)
      if (ev.alternatives[i].logprob > ev.alternatives[i - 1].logprob)
        fail(ErrorKind::Protocol, "alternatives not sorted by logprob");
  }
}

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Transcript generate(const Prompt& prompt, const DecodeParams& params) = 0;
};

}  // namespace sceneseg
