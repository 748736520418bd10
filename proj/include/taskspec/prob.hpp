#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "taskspec/vocab.hpp"

namespace taskspec {

// Next-token distribution over the vocabulary. Entries are non-negative and
// sum to 1 within 1e-9; producers are responsible for normalization.
using ProbVector = std::vector<double>;

inline bool is_prob_vector(const ProbVector& p, double tol = 1e-9) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0) || !std::isfinite(x)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

// Index of the maximum entry; ties broken by the lowest token id.
inline TokenId greedy_token(const ProbVector& dist) {
  if (dist.empty()) throw std::invalid_argument("greedy_token: empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    if (dist[i] > dist[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

// Inverse-CDF sample. `u` must be in [0, 1); fp slack at the top of the
// cumulative sum falls back to the last positive entry.
inline TokenId sample_with_uniform(const ProbVector& dist, double u) {
  if (dist.empty()) throw std::invalid_argument("sample: empty distribution");
  double cum = 0.0;
  std::size_t last_positive = 0;
  bool any = false;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > 0.0) {
      last_positive = i;
      any = true;
      cum += dist[i];
      if (u < cum) return static_cast<TokenId>(i);
    }
  }
  if (!any) throw std::invalid_argument("sample: distribution has no mass");
  return static_cast<TokenId>(last_positive);
}

template <class Rng>
TokenId sample_token(const ProbVector& dist, Rng& rng) {
  return sample_with_uniform(dist, rng.uniform());
}

}  // namespace taskspec
