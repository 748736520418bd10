#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskspec/det_random.hpp"
#include "taskspec/language_model.hpp"
#include "taskspec/prob.hpp"

namespace taskspec {

enum class DecodeMode { kGreedy, kStochastic };

inline std::string to_string(DecodeMode mode) {
  return mode == DecodeMode::kGreedy ? "greedy" : "stochastic";
}

// Tokens drafted in one speculation iteration, paired with the draft's
// distribution at each position.
struct DraftProposal {
  std::vector<TokenId> tokens;
  std::vector<ProbVector> dists;

  std::size_t size() const { return tokens.size(); }
};

struct VerificationResult {
  std::size_t accepted_len = 0;
  TokenId emitted_token = 0;  // correction on rejection, bonus on full acceptance
  std::vector<bool> decisions;
};

struct DecodeStats {
  std::uint64_t drafted_tokens = 0;
  std::uint64_t accepted_tokens = 0;
  std::uint64_t target_passes = 0;
  std::uint64_t draft_passes = 0;
  std::uint64_t output_tokens = 0;
  double wall_time_s = 0.0;
  // Accumulated time inside draft / target distribution evaluations.
  double draft_time_s = 0.0;
  double target_time_s = 0.0;

  DecodeStats& operator+=(const DecodeStats& o) {
    drafted_tokens += o.drafted_tokens;
    accepted_tokens += o.accepted_tokens;
    target_passes += o.target_passes;
    draft_passes += o.draft_passes;
    output_tokens += o.output_tokens;
    wall_time_s += o.wall_time_s;
    draft_time_s += o.draft_time_s;
    target_time_s += o.target_time_s;
    return *this;
  }
};

struct StatsSummary {
  double acceptance_rate = 0.0;   // accepted / drafted
  double tau = 0.0;               // accepted per target pass
  double tau_with_bonus = 0.0;    // (accepted + emitted) per target pass
  double tokens_per_second = 0.0;
};

inline StatsSummary compute_stats(const DecodeStats& s) {
  if (s.drafted_tokens == 0) throw std::invalid_argument("compute_stats: no drafted tokens");
  if (s.target_passes == 0) throw std::invalid_argument("compute_stats: no target passes");
  if (!(s.wall_time_s > 0.0)) throw std::invalid_argument("compute_stats: zero wall time");
  StatsSummary out;
  out.acceptance_rate =
      static_cast<double>(s.accepted_tokens) / static_cast<double>(s.drafted_tokens);
  out.tau = static_cast<double>(s.accepted_tokens) / static_cast<double>(s.target_passes);
  out.tau_with_bonus = static_cast<double>(s.accepted_tokens + s.target_passes) /
                       static_cast<double>(s.target_passes);
  out.tokens_per_second = static_cast<double>(s.output_tokens) / s.wall_time_s;
  return out;
}

struct DecodeResult {
  std::vector<TokenId> tokens;  // EOS stripped
  DecodeStats stats;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace detail

// Plain autoregressive decoding: one model pass per emitted token. Greedy
// when no seed is given, otherwise samples from the model distribution.
// Generation stops at EOS or after max_tokens appends; EOS counts toward
// output_tokens but is stripped from the returned sequence.
inline DecodeResult decode_autoregressive(const LanguageModel& model,
                                          std::span<const TokenId> prompt,
                                          std::uint64_t max_tokens,
                                          std::optional<std::uint64_t> rng_seed = {}) {
  DecodeResult res;
  const auto t0 = detail::Clock::now();
  SplitMix64 rng(rng_seed.value_or(0));
  std::vector<TokenId> ctx(prompt.begin(), prompt.end());
  while (res.stats.output_tokens < max_tokens) {
    const auto tp = detail::Clock::now();
    const ProbVector dist = model.next_distribution(ctx);
    res.stats.target_time_s += detail::seconds_since(tp);
    res.stats.target_passes += 1;
    const TokenId tok = rng_seed ? sample_token(dist, rng) : greedy_token(dist);
    ctx.push_back(tok);
    res.tokens.push_back(tok);
    res.stats.output_tokens += 1;
    if (tok == Vocab::kEos) break;
  }
  if (!res.tokens.empty() && res.tokens.back() == Vocab::kEos) res.tokens.pop_back();
  res.stats.wall_time_s = detail::seconds_since(t0);
  return res;
}

// Drafts up to `gamma` tokens autoregressively, recording the draft
// distribution at each position. Stops early when the draft emits EOS.
template <class Rng>
DraftProposal draft_propose(const LanguageModel& draft, std::span<const TokenId> context,
                            int gamma, DecodeMode mode, Rng& rng) {
  if (gamma < 1) throw std::invalid_argument("draft_propose: gamma must be >= 1");
  DraftProposal prop;
  std::vector<TokenId> ctx(context.begin(), context.end());
  for (int i = 0; i < gamma; ++i) {
    ProbVector dist = draft.next_distribution(ctx);
    const TokenId tok =
        mode == DecodeMode::kGreedy ? greedy_token(dist) : sample_token(dist, rng);
    prop.tokens.push_back(tok);
    prop.dists.push_back(std::move(dist));
    ctx.push_back(tok);
    if (tok == Vocab::kEos) break;
  }
  return prop;
}

// Deterministic-match verification: accept the longest prefix whose tokens
// equal the target argmax at each position; the emitted token is the target
// argmax at the first mismatch (or the bonus position on full acceptance).
inline VerificationResult verify_greedy(const std::vector<ProbVector>& target_dists,
                                        const DraftProposal& proposal) {
  if (target_dists.size() != proposal.size() + 1) {
    throw std::invalid_argument("verify_greedy: need |proposal|+1 target distributions");
  }
  VerificationResult vr;
  vr.decisions.assign(proposal.size(), false);
  while (vr.accepted_len < proposal.size()) {
    const TokenId want = greedy_token(target_dists[vr.accepted_len]);
    if (proposal.tokens[vr.accepted_len] != want) break;
    vr.decisions[vr.accepted_len] = true;
    ++vr.accepted_len;
  }
  vr.emitted_token = greedy_token(target_dists[vr.accepted_len]);
  return vr;
}

// normalize(max(0, p - q)): the resampling distribution after a stochastic
// rejection. Undefined when p == q elementwise.
inline ProbVector residual_distribution(const ProbVector& p, const ProbVector& q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("residual_distribution: size mismatch");
  }
  ProbVector r(p.size(), 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - q[i];
    if (d > 0.0) {
      r[i] = d;
      mass += d;
    }
  }
  if (mass <= 0.0) {
    throw std::invalid_argument("residual undefined for identical distributions");
  }
  for (double& x : r) x /= mass;
  return r;
}

inline double acceptance_probability(const ProbVector& p, const ProbVector& q, TokenId x) {
  const double qx = q[static_cast<std::size_t>(x)];
  if (!(qx > 0.0)) {
    throw std::invalid_argument(
        "verify_stochastic: drafted token has zero draft probability");
  }
  return std::min(1.0, p[static_cast<std::size_t>(x)] / qx);
}

// Speculative-sampling verification: accept token x_i with probability
// min(1, p_i(x_i)/q_i(x_i)); on the first rejection resample from the
// residual distribution, on full acceptance sample the bonus position.
// Preserves the target marginal exactly.
template <class Rng>
VerificationResult verify_stochastic(const std::vector<ProbVector>& target_dists,
                                     const DraftProposal& proposal, Rng& rng) {
  if (target_dists.size() != proposal.size() + 1) {
    throw std::invalid_argument("verify_stochastic: need |proposal|+1 target distributions");
  }
  VerificationResult vr;
  vr.decisions.assign(proposal.size(), false);
  while (vr.accepted_len < proposal.size()) {
    const std::size_t i = vr.accepted_len;
    const double ratio =
        acceptance_probability(target_dists[i], proposal.dists[i], proposal.tokens[i]);
    if (rng.uniform() < ratio) {
      vr.decisions[i] = true;
      ++vr.accepted_len;
      continue;
    }
    vr.emitted_token =
        sample_token(residual_distribution(target_dists[i], proposal.dists[i]), rng);
    return vr;
  }
  vr.emitted_token = sample_token(target_dists[proposal.size()], rng);
  return vr;
}

struct SpecDecodeConfig {
  int gamma = 5;
  std::uint64_t max_tokens = 64;
  DecodeMode mode = DecodeMode::kGreedy;
  std::uint64_t rng_seed = 0;
  std::ostream* trace = nullptr;  // JSONL per iteration when set
};

// The draft-then-verify loop: the draft proposes gamma tokens, the target
// evaluates |proposal|+1 distributions (billed as one target pass, mirroring
// batched verification), a prefix is accepted and one token is emitted.
// In greedy mode the output is byte-identical to target-only decoding.
inline DecodeResult speculative_decode(const LanguageModel& target,
                                       const LanguageModel& draft,
                                       std::span<const TokenId> prompt,
                                       const SpecDecodeConfig& cfg) {
  if (cfg.gamma < 1) throw std::invalid_argument("speculative_decode: gamma must be >= 1");
  DecodeResult res;
  const auto t0 = detail::Clock::now();
  SplitMix64 rng(cfg.rng_seed);
  std::vector<TokenId> ctx(prompt.begin(), prompt.end());
  std::uint64_t iter = 0;
  bool done = false;

  // Appends one token under the max_tokens/EOS budget; returns false once
  // generation must stop.
  auto emit = [&](TokenId tok) {
    if (res.stats.output_tokens >= cfg.max_tokens) return false;
    ctx.push_back(tok);
    res.tokens.push_back(tok);
    res.stats.output_tokens += 1;
    return tok != Vocab::kEos && res.stats.output_tokens < cfg.max_tokens;
  };

  while (!done && res.stats.output_tokens < cfg.max_tokens) {
    const auto td = detail::Clock::now();
    const DraftProposal prop = draft_propose(draft, ctx, cfg.gamma, cfg.mode, rng);
    res.stats.draft_time_s += detail::seconds_since(td);
    res.stats.draft_passes += prop.size();
    res.stats.drafted_tokens += prop.size();

    const auto tt = detail::Clock::now();
    std::vector<ProbVector> target_dists;
    target_dists.reserve(prop.size() + 1);
    std::vector<TokenId> verify_ctx = ctx;
    for (std::size_t i = 0; i <= prop.size(); ++i) {
      target_dists.push_back(target.next_distribution(verify_ctx));
      if (i < prop.size()) verify_ctx.push_back(prop.tokens[i]);
    }
    res.stats.target_time_s += detail::seconds_since(tt);
    res.stats.target_passes += 1;

    const VerificationResult vr = cfg.mode == DecodeMode::kGreedy
                                      ? verify_greedy(target_dists, prop)
                                      : verify_stochastic(target_dists, prop, rng);
    res.stats.accepted_tokens += vr.accepted_len;

    for (std::size_t i = 0; i < vr.accepted_len && !done; ++i) {
      done = !emit(prop.tokens[i]);
    }
    if (!done) done = !emit(vr.emitted_token);

    if (cfg.trace) {
      *cfg.trace << nlohmann::json{{"iter", iter},
                                   {"drafted", prop.size()},
                                   {"accepted", vr.accepted_len},
                                   {"emitted", vr.emitted_token},
                                   {"mode", to_string(cfg.mode)}}
                        .dump()
                 << '\n';
    }
    ++iter;
  }
  if (!res.tokens.empty() && res.tokens.back() == Vocab::kEos) res.tokens.pop_back();
  res.stats.wall_time_s = detail::seconds_since(t0);
  return res;
}

}  // namespace taskspec
