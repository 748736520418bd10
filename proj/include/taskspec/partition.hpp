#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "taskspec/det_random.hpp"
#include "taskspec/stopwords.hpp"
#include "taskspec/vocab.hpp"

namespace taskspec {

using FeatureVector = std::vector<double>;

// Cleans a text for clustering/classification: lowercase, strip special
// characters (alphanumerics, '+', '-', '_' and non-ASCII bytes survive),
// drop stopwords. Token order is preserved.
inline std::vector<std::string> preprocess(std::string_view text,
                                           const std::set<std::string>& stopwords) {
  std::vector<std::string> out;
  for (const auto& raw : tokenize(text)) {
    std::string tok;
    for (char c : raw) {
      const auto uc = static_cast<unsigned char>(c);
      if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '+' || c == '-' ||
          c == '_' || uc >= 0x80) {
        tok.push_back(c);
      }
    }
    if (tok.empty() || stopwords.count(tok)) continue;
    out.push_back(std::move(tok));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hashed TF-IDF + seeded Gaussian random projection.

struct EmbedParams {
  std::size_t hash_dim = 32768;
  std::size_t reduce_dim = 64;
  std::uint64_t seed = 0;
};

// Sparse hashed TF-IDF vectors (pre-projection), L2-normalized. Bin index is
// fnv1a64(token) mod hash_dim. Exposed separately so the projection step can
// be validated against the exact sparse geometry.
inline std::vector<std::map<std::size_t, double>> hashed_tfidf(
    const std::vector<std::vector<std::string>>& docs, std::size_t hash_dim) {
  if (docs.empty()) throw std::invalid_argument("hashed_tfidf: empty corpus");
  if (hash_dim < 2) throw std::invalid_argument("hashed_tfidf: hash_dim too small");

  std::vector<std::map<std::size_t, double>> tf(docs.size());
  std::map<std::size_t, std::size_t> df;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& tok : docs[d]) {
      tf[d][static_cast<std::size_t>(fnv1a64(tok) % hash_dim)] += 1.0;
    }
    for (const auto& [bin, _] : tf[d]) df[bin] += 1;
  }
  const double n = static_cast<double>(docs.size());
  for (auto& doc : tf) {
    double norm_sq = 0.0;
    for (auto& [bin, value] : doc) {
      const double idf =
          std::log((1.0 + n) / (1.0 + static_cast<double>(df[bin]))) + 1.0;
      value *= idf;
      norm_sq += value * value;
    }
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (auto& [bin, value] : doc) value *= inv;
    }
  }
  return tf;
}

// Dense reduced vectors: hashed TF-IDF followed by a seeded Gaussian random
// projection. The projection row for a bin is derived from (seed, bin) so no
// hash_dim x reduce_dim matrix is materialized; everything is reproducible
// bit-for-bit for a fixed seed.
inline std::vector<FeatureVector> embed_corpus(
    const std::vector<std::vector<std::string>>& docs, const EmbedParams& params) {
  if (params.hash_dim < params.reduce_dim || params.reduce_dim < 2) {
    throw std::invalid_argument("embed_corpus: need hash_dim >= reduce_dim >= 2");
  }
  const auto sparse = hashed_tfidf(docs, params.hash_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.reduce_dim));
  std::vector<FeatureVector> out(sparse.size());
  std::vector<double> row(params.reduce_dim);
  for (std::size_t d = 0; d < sparse.size(); ++d) {
    out[d].assign(params.reduce_dim, 0.0);
    for (const auto& [bin, value] : sparse[d]) {
      SplitMix64 rng(seed_stream(params.seed, bin));
      for (std::size_t j = 0; j < params.reduce_dim; ++j) row[j] = rng.gaussian();
      for (std::size_t j = 0; j < params.reduce_dim; ++j) {
        out[d][j] += value * scale * row[j];
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// K-means (k-means++ init, Lloyd iterations).

struct KmeansParams {
  int k = 2;
  std::uint64_t seed = 0;
  int max_iter = 100;
  double tol = 1e-6;
};

// Result of clustering a point set. `members` is the partition view:
// members[c] lists the indices assigned to cluster c.
struct ClusteredDataset {
  int k = 0;
  std::vector<int> assignments;
  std::vector<FeatureVector> centroids;
  std::vector<std::vector<std::size_t>> members;
  double inertia = 0.0;
  std::vector<double> inertia_history;
};

namespace detail {

inline double sq_dist(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline std::vector<FeatureVector> kmeanspp_init(const std::vector<FeatureVector>& points,
                                                int k, SplitMix64& rng) {
  std::vector<FeatureVector> centers;
  centers.reserve(static_cast<std::size_t>(k));
  centers.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size());
  while (centers.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, sq_dist(points[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      // All remaining points coincide with a center; fall back to uniform.
      centers.push_back(points[rng.below(points.size())]);
      continue;
    }
    double r = rng.uniform() * total;
    std::size_t pick = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      r -= d2[i];
      if (r <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.push_back(points[pick]);
  }
  return centers;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed seed.
// An empty cluster is repaired by reassigning the point farthest from its
// current centroid.
inline ClusteredDataset kmeans_cluster(const std::vector<FeatureVector>& points,
                                       const KmeansParams& params) {
  if (params.k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (points.size() < static_cast<std::size_t>(params.k)) {
    throw std::invalid_argument("kmeans: fewer points than clusters");
  }
  const std::size_t dim = points[0].size();
  for (const auto& p : points) {
    if (p.size() != dim) throw std::invalid_argument("kmeans: inconsistent dimensions");
  }

  SplitMix64 rng(params.seed);
  ClusteredDataset out;
  out.k = params.k;
  out.centroids = detail::kmeanspp_init(points, params.k, rng);
  out.assignments.assign(points.size(), 0);

  const auto k = static_cast<std::size_t>(params.k);
  for (int iter = 0; iter < params.max_iter; ++iter) {
    // Assignment step; ties go to the lowest cluster id.
    double inertia = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d = detail::sq_dist(points[i], out.centroids[c]);
        if (d < best) {
          best = d;
          best_c = static_cast<int>(c);
        }
      }
      out.assignments[i] = best_c;
      inertia += best;
    }

    // Empty-cluster repair: move the globally farthest point into the
    // empty cluster before recomputing means.
    std::vector<std::size_t> sizes(k, 0);
    for (int a : out.assignments) sizes[static_cast<std::size_t>(a)] += 1;
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        const auto a = static_cast<std::size_t>(out.assignments[i]);
        if (sizes[a] <= 1) continue;
        const double d = detail::sq_dist(points[i], out.centroids[a]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      sizes[static_cast<std::size_t>(out.assignments[far])] -= 1;
      out.assignments[far] = static_cast<int>(c);
      sizes[c] += 1;
    }

    // Update step.
    std::vector<FeatureVector> next(k, FeatureVector(dim, 0.0));
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto c = static_cast<std::size_t>(out.assignments[i]);
      for (std::size_t j = 0; j < dim; ++j) next[c][j] += points[i][j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < dim; ++j) {
        next[c][j] /= static_cast<double>(sizes[c]);
      }
      shift = std::max(shift, detail::sq_dist(next[c], out.centroids[c]));
    }
    out.centroids = std::move(next);
    out.inertia_history.push_back(inertia);
    if (std::sqrt(shift) < params.tol) break;
  }

  // Final assignment against the converged centroids.
  out.inertia = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_c = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = detail::sq_dist(points[i], out.centroids[c]);
      if (d < best) {
        best = d;
        best_c = static_cast<int>(c);
      }
    }
    out.assignments[i] = best_c;
    out.inertia += best;
  }
  out.members.assign(k, {});
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.members[static_cast<std::size_t>(out.assignments[i])].push_back(i);
  }
  return out;
}

// Accuracy under the best one-to-one cluster-to-label matching, computed by
// exhaustive search over the k x k contingency table (k <= 10).
inline double cluster_accuracy(const ClusteredDataset& clustering,
                               const std::vector<int>& labels) {
  if (labels.size() != clustering.assignments.size()) {
    throw std::invalid_argument("cluster_accuracy: label/record count mismatch");
  }
  std::set<int> distinct(labels.begin(), labels.end());
  const auto k = static_cast<std::size_t>(clustering.k);
  if (distinct.size() != k) {
    throw std::invalid_argument("cluster_accuracy: distinct label count != k");
  }
  if (k > 10) throw std::invalid_argument("cluster_accuracy: k > 10 unsupported");

  std::map<int, std::size_t> label_index;
  for (int l : distinct) label_index.emplace(l, label_index.size());

  std::vector<std::vector<std::uint64_t>> table(k, std::vector<std::uint64_t>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    table[static_cast<std::size_t>(clustering.assignments[i])]
         [label_index.at(labels[i])] += 1;
  }

  std::vector<std::size_t> perm(k);
  for (std::size_t i = 0; i < k; ++i) perm[i] = i;
  std::uint64_t best = 0;
  do {
    std::uint64_t hit = 0;
    for (std::size_t c = 0; c < k; ++c) hit += table[c][perm[c]];
    best = std::max(best, hit);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(labels.size());
}

// Mean silhouette coefficient; used by the optional k sweep, reported only.
inline double silhouette_score(const std::vector<FeatureVector>& points,
                               const std::vector<int>& assignments, int k) {
  if (points.size() != assignments.size() || k < 2) {
    throw std::invalid_argument("silhouette_score: bad arguments");
  }
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignments) sizes[static_cast<std::size_t>(a)] += 1;

  double total = 0.0;
  std::vector<double> mean_d(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::fill(mean_d.begin(), mean_d.end(), 0.0);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      mean_d[static_cast<std::size_t>(assignments[j])] +=
          std::sqrt(detail::sq_dist(points[i], points[j]));
    }
    const auto own = static_cast<std::size_t>(assignments[i]);
    if (sizes[own] <= 1) continue;  // silhouette defined as 0 for singletons
    const double a = mean_d[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, mean_d[c] / static_cast<double>(sizes[c]));
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(points.size());
}

}  // namespace taskspec
