#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "taskspec/det_random.hpp"
#include "taskspec/specdec.hpp"

namespace taskspec {

// Parameters of the analytic speedup model: alpha is the per-token
// draft/target agreement probability, c the draft-to-target per-step cost
// ratio, gamma the speculation length.
struct SpeedupParams {
  double alpha = 0.0;
  double c = 0.05;
  int gamma = 0;

  // alpha == 1 makes the closed form singular.
  bool in_formula_domain() const { return alpha >= 0.0 && alpha < 1.0; }
};

inline void validate_params(const SpeedupParams& p) {
  if (p.alpha < 0.0 || p.alpha >= 1.0) {
    throw std::invalid_argument("speedup params: alpha must be in [0,1)");
  }
  if (!(p.c > 0.0)) throw std::invalid_argument("speedup params: c must be > 0");
  if (p.gamma < 0) throw std::invalid_argument("speedup params: gamma must be >= 0");
}

// Expected tokens produced per speculation iteration (accepted prefix plus
// the emitted token) under i.i.d. per-position acceptance:
// (1 - alpha^(gamma+1)) / (1 - alpha).
inline double expected_tokens_per_iteration(double alpha, int gamma) {
  if (alpha < 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("expected_tokens_per_iteration: alpha must be in [0,1)");
  }
  if (gamma < 0) throw std::invalid_argument("expected_tokens_per_iteration: gamma >= 0");
  return (1.0 - std::pow(alpha, gamma + 1)) / (1.0 - alpha);
}

// Closed-form speedup over autoregressive decoding:
// (1 - alpha^(gamma+1)) / ((1 - alpha) * (gamma*c + 1)).
inline double theoretical_speedup(const SpeedupParams& p) {
  validate_params(p);
  return expected_tokens_per_iteration(p.alpha, p.gamma) /
         (static_cast<double>(p.gamma) * p.c + 1.0);
}

struct SimResult {
  double simulated_speedup = 0.0;
  double mean_tokens_per_iteration = 0.0;
  std::uint64_t iterations = 0;
  std::uint64_t seed = 0;
};

namespace detail {

// One speculation iteration: Bernoulli acceptances until the first failure.
// decay < 1 lowers the acceptance probability with position (alpha_i =
// alpha * decay^i), mimicking the observed drop-off away from the first
// drafted token; decay == 1 is the i.i.d. model behind the closed form.
template <class Rng>
int simulate_accept_run(double alpha, int gamma, double decay, Rng& rng) {
  int run = 0;
  double a = alpha;
  for (int i = 0; i < gamma; ++i) {
    if (!(rng.uniform() < a)) break;
    ++run;
    a *= decay;
  }
  return run;
}

}  // namespace detail

// Monte Carlo counterpart of the closed form. Per-iteration cost is
// gamma*c + 1 (gamma draft steps plus one verification); the autoregressive
// baseline costs 1 per token. Runs until at least n_tokens are produced.
inline SimResult simulate_speculative(const SpeedupParams& p, std::uint64_t n_tokens,
                                      std::uint64_t seed, double decay = 1.0) {
  validate_params(p);
  if (n_tokens < 1) throw std::invalid_argument("simulate_speculative: n_tokens >= 1");
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw std::invalid_argument("simulate_speculative: decay must be in (0,1]");
  }
  SplitMix64 rng(seed);
  const double iter_cost = static_cast<double>(p.gamma) * p.c + 1.0;
  std::uint64_t tokens = 0;
  std::uint64_t iters = 0;
  while (tokens < n_tokens) {
    tokens += static_cast<std::uint64_t>(
                  detail::simulate_accept_run(p.alpha, p.gamma, decay, rng)) +
              1;
    ++iters;
  }
  SimResult r;
  r.iterations = iters;
  r.seed = seed;
  r.mean_tokens_per_iteration =
      static_cast<double>(tokens) / static_cast<double>(iters);
  r.simulated_speedup = static_cast<double>(tokens) /
                        (static_cast<double>(iters) * iter_cost);
  return r;
}

// Fixed-iteration variant, used to check convergence of the mean
// tokens-per-iteration estimate.
inline SimResult simulate_speculative_iters(const SpeedupParams& p,
                                            std::uint64_t n_iterations,
                                            std::uint64_t seed, double decay = 1.0) {
  validate_params(p);
  if (n_iterations < 1) throw std::invalid_argument("simulate_speculative_iters: n >= 1");
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw std::invalid_argument("simulate_speculative_iters: decay must be in (0,1]");
  }
  SplitMix64 rng(seed);
  const double iter_cost = static_cast<double>(p.gamma) * p.c + 1.0;
  std::uint64_t tokens = 0;
  for (std::uint64_t i = 0; i < n_iterations; ++i) {
    tokens += static_cast<std::uint64_t>(
                  detail::simulate_accept_run(p.alpha, p.gamma, decay, rng)) +
              1;
  }
  SimResult r;
  r.iterations = n_iterations;
  r.seed = seed;
  r.mean_tokens_per_iteration =
      static_cast<double>(tokens) / static_cast<double>(n_iterations);
  r.simulated_speedup = r.mean_tokens_per_iteration / iter_cost;
  return r;
}

// Argmax of the closed-form speedup over gamma in [0, gamma_max]; ties break
// toward the smallest gamma.
inline int optimal_gamma(double alpha, double c, int gamma_max) {
  if (gamma_max < 1) throw std::invalid_argument("optimal_gamma: gamma_max must be >= 1");
  int best = 0;
  double best_speedup = theoretical_speedup({alpha, c, 0});
  for (int g = 1; g <= gamma_max; ++g) {
    const double s = theoretical_speedup({alpha, c, g});
    if (s > best_speedup) {
      best_speedup = s;
      best = g;
    }
  }
  return best;
}

struct PassTimings {
  std::span<const double> draft_pass_s;
  std::span<const double> target_pass_s;
};

// Fits the model parameters to a measured run: alpha from the acceptance
// rate, c from the ratio of mean per-pass wall times. alpha == 1 (every
// draft accepted) is representable but flagged out of the formula's domain
// via SpeedupParams::in_formula_domain().
inline SpeedupParams estimate_params(const DecodeStats& stats, const PassTimings& timings,
                                     int gamma) {
  if (stats.drafted_tokens == 0) {
    throw std::invalid_argument("estimate_params: no drafted tokens");
  }
  if (timings.draft_pass_s.empty() || timings.target_pass_s.empty()) {
    throw std::invalid_argument("estimate_params: empty timing samples");
  }
  double draft_mean = 0.0;
  for (double t : timings.draft_pass_s) draft_mean += t;
  draft_mean /= static_cast<double>(timings.draft_pass_s.size());
  double target_mean = 0.0;
  for (double t : timings.target_pass_s) target_mean += t;
  target_mean /= static_cast<double>(timings.target_pass_s.size());
  if (!(target_mean > 0.0)) {
    throw std::invalid_argument("estimate_params: zero target pass time");
  }
  SpeedupParams p;
  p.alpha = static_cast<double>(stats.accepted_tokens) /
            static_cast<double>(stats.drafted_tokens);
  p.c = draft_mean / target_mean;
  p.gamma = gamma;
  return p;
}

}  // namespace taskspec
