#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taskspec/det_random.hpp"
#include "taskspec/ngram.hpp"

namespace taskspec {

// A task-adapted draft: the shared base draft nudged toward one cluster's
// data. The adapted distribution is the convex combination
//     (1 - mu) * p_base + mu * p_cluster
// evaluated lazily at query time; the base model is never modified, so one
// frozen base serves every task.
class InterpolatedDraft : public LanguageModel {
 public:
  InterpolatedDraft(std::shared_ptr<const NgramModel> base, NgramModel cluster_model,
                    double mu)
      : base_(std::move(base)), cluster_(std::move(cluster_model)), mu_(mu) {
    if (!base_) throw std::invalid_argument("InterpolatedDraft: null base model");
    if (mu_ < 0.0 || mu_ > 1.0) {
      throw std::invalid_argument("InterpolatedDraft: mu must be in [0,1]");
    }
    if (!(cluster_.vocab() == base_->vocab())) {
      throw std::invalid_argument("InterpolatedDraft: vocab mismatch with base");
    }
  }

  const Vocab& vocab() const override { return base_->vocab(); }
  const NgramModel& base() const { return *base_; }
  const NgramModel& cluster_model() const { return cluster_; }
  double mu() const { return mu_; }

  ProbVector next_distribution(std::span<const TokenId> context) const override {
    if (mu_ == 0.0) return base_->next_distribution(context);
    if (mu_ == 1.0) return cluster_.next_distribution(context);
    ProbVector p = base_->next_distribution(context);
    const ProbVector q = cluster_.next_distribution(context);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = (1.0 - mu_) * p[i] + mu_ * q[i];
    }
    return p;
  }

 private:
  std::shared_ptr<const NgramModel> base_;
  NgramModel cluster_;
  double mu_;
};

// Trains a cluster-specific n-gram over the base vocabulary and wraps it
// with the base as an adapted draft.
inline InterpolatedDraft adapt_draft(std::shared_ptr<const NgramModel> base,
                                     const std::vector<std::vector<TokenId>>& cluster_corpus,
                                     double mu, int cluster_order) {
  if (!base) throw std::invalid_argument("adapt_draft: null base model");
  if (cluster_corpus.empty()) {
    throw std::invalid_argument("cannot adapt on empty cluster");
  }
  NgramModel cluster =
      train_ngram(cluster_corpus, cluster_order, base->lambda(), base->vocab());
  return InterpolatedDraft(std::move(base), std::move(cluster), mu);
}

// The heterogeneous draft set: one adapted model per cluster id, all sharing
// one frozen base. `tag_to_cluster` maps explicit task tags to cluster ids
// for the router's bypass path.
struct DraftSet {
  std::shared_ptr<const NgramModel> base;
  double mu = 0.8;
  int cluster_order = 0;
  std::map<int, InterpolatedDraft> per_task;
  std::map<std::string, int> tag_to_cluster;
  std::vector<std::size_t> cluster_sizes;
  std::vector<std::uint64_t> corpus_hashes;

  int k() const { return static_cast<int>(per_task.size()); }

  const InterpolatedDraft& draft_for(int cluster) const {
    auto it = per_task.find(cluster);
    if (it == per_task.end()) {
      throw std::out_of_range("draft set has no cluster " + std::to_string(cluster));
    }
    return it->second;
  }
};

namespace detail {

inline std::uint64_t corpus_hash(const std::vector<std::vector<TokenId>>& corpus) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& seq : corpus) {
    for (TokenId t : seq) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(t));
      h *= 0x100000001b3ull;
    }
    h ^= 0xff;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace detail

// Builds one adapted draft per cluster. cluster_corpora is indexed by
// cluster id; an empty cluster is an error naming the offending id.
inline DraftSet build_draft_set(std::shared_ptr<const NgramModel> base,
                                const std::vector<std::vector<std::vector<TokenId>>>& cluster_corpora,
                                double mu, int cluster_order,
                                std::map<std::string, int> tag_to_cluster = {}) {
  if (!base) throw std::invalid_argument("build_draft_set: null base model");
  DraftSet set;
  set.base = base;
  set.mu = mu;
  set.cluster_order = cluster_order;
  set.tag_to_cluster = std::move(tag_to_cluster);
  for (std::size_t c = 0; c < cluster_corpora.size(); ++c) {
    if (cluster_corpora[c].empty()) {
      throw std::invalid_argument("cannot adapt on empty cluster " + std::to_string(c));
    }
    set.per_task.emplace(static_cast<int>(c),
                         adapt_draft(base, cluster_corpora[c], mu, cluster_order));
    set.cluster_sizes.push_back(cluster_corpora[c].size());
    set.corpus_hashes.push_back(detail::corpus_hash(cluster_corpora[c]));
  }
  return set;
}

// Directory layout: base.json, task_<id>.json, manifest.json.
inline void save_draft_set(const DraftSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "base.json");
    set.base->save(os);
  }
  nlohmann::json sizes = nlohmann::json::array();
  for (auto s : set.cluster_sizes) sizes.push_back(s);
  nlohmann::json hashes = nlohmann::json::array();
  for (auto h : set.corpus_hashes) hashes.push_back(h);
  nlohmann::json manifest{{"mu", set.mu},
                          {"cluster_order", set.cluster_order},
                          {"k", set.k()},
                          {"cluster_sizes", sizes},
                          {"corpus_hashes", hashes},
                          {"tags", set.tag_to_cluster}};
  std::ofstream man(dir / "manifest.json");
  man << manifest.dump(2) << '\n';
  for (const auto& [id, draft] : set.per_task) {
    std::ofstream os(dir / ("task_" + std::to_string(id) + ".json"));
    os << draft.cluster_model().to_json().dump(2) << '\n';
  }
}

inline DraftSet load_draft_set(const std::filesystem::path& dir) {
  std::ifstream man_is(dir / "manifest.json");
  if (!man_is) {
    throw std::runtime_error("draft set manifest not found in " + dir.string());
  }
  nlohmann::json manifest;
  man_is >> manifest;

  std::ifstream base_is(dir / "base.json");
  if (!base_is) throw std::runtime_error("draft set base model not found");
  auto base = std::make_shared<const NgramModel>(NgramModel::load(base_is));

  DraftSet set;
  set.base = base;
  set.mu = manifest.at("mu").get<double>();
  set.cluster_order = manifest.at("cluster_order").get<int>();
  set.tag_to_cluster =
      manifest.at("tags").get<std::map<std::string, int>>();
  set.cluster_sizes = manifest.at("cluster_sizes").get<std::vector<std::size_t>>();
  set.corpus_hashes = manifest.at("corpus_hashes").get<std::vector<std::uint64_t>>();
  const int k = manifest.at("k").get<int>();
  for (int c = 0; c < k; ++c) {
    std::ifstream os(dir / ("task_" + std::to_string(c) + ".json"));
    if (!os) throw std::runtime_error("missing adapted model task_" + std::to_string(c));
    set.per_task.emplace(c, InterpolatedDraft(base, NgramModel::load(os), set.mu));
  }
  return set;
}

}  // namespace taskspec
