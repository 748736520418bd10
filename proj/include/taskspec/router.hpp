#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "taskspec/det_random.hpp"
#include "taskspec/draft_forge.hpp"
#include "taskspec/partition.hpp"
#include "taskspec/records.hpp"
#include "taskspec/stopwords.hpp"

namespace taskspec {

struct RouterTrainMeta {
  std::uint64_t seed = 0;
  int epochs = 20;
  double split = 0.8;
  double lr = 0.1;
  int batch_size = 32;
};

// Lightweight online prompt classifier: mean-pooled hashed bag-of-words
// features into a multinomial logistic layer. Offline training, pure-function
// online classification.
class RouterModel {
 public:
  struct Classification {
    int label = 0;
    ProbVector confidence;
  };

  RouterModel() = default;
  RouterModel(int classes, std::size_t hash_dim, RouterTrainMeta meta)
      : classes_(classes),
        hash_dim_(hash_dim),
        weights_(static_cast<std::size_t>(classes) * hash_dim, 0.0),
        biases_(static_cast<std::size_t>(classes), 0.0),
        meta_(meta) {}

  int classes() const { return classes_; }
  std::size_t hash_dim() const { return hash_dim_; }
  const RouterTrainMeta& train_meta() const { return meta_; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& biases() { return biases_; }
  const std::vector<double>& biases() const { return biases_; }

  // Sparse mean-pooled feature map of a prompt. Prompts that preprocess to
  // nothing yield an empty map and are scored by the biases alone.
  std::map<std::size_t, double> features(std::string_view text) const {
    const auto tokens = preprocess(text, default_stopwords());
    std::map<std::size_t, double> feat;
    if (tokens.empty()) return feat;
    const double w = 1.0 / static_cast<double>(tokens.size());
    for (const auto& tok : tokens) feat[fnv1a64(tok) % hash_dim_] += w;
    return feat;
  }

  std::vector<double> scores(const std::map<std::size_t, double>& feat) const {
    std::vector<double> s(biases_);
    for (const auto& [idx, value] : feat) {
      for (int c = 0; c < classes_; ++c) {
        s[static_cast<std::size_t>(c)] +=
            weights_[static_cast<std::size_t>(c) * hash_dim_ + idx] * value;
      }
    }
    return s;
  }

  static ProbVector softmax(const std::vector<double>& scores) {
    const double m = *std::max_element(scores.begin(), scores.end());
    ProbVector p(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      p[i] = std::exp(scores[i] - m);
      sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
  }

  Classification classify(std::string_view text) const {
    if (classes_ < 2) throw std::runtime_error("router not trained");
    Classification out;
    out.confidence = softmax(scores(features(text)));
    out.label = greedy_token(out.confidence);  // argmax, ties to lowest label
    return out;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"classes", classes_},
        {"weights", weights_},
        {"biases", biases_},
        {"preprocess_params",
         {{"stopword_list", "default"}, {"hash_dim", hash_dim_}}},
        {"train_meta",
         {{"seed", meta_.seed},
          {"epochs", meta_.epochs},
          {"split", meta_.split},
          {"lr", meta_.lr},
          {"batch_size", meta_.batch_size}}}};
  }

  static RouterModel from_json(const nlohmann::json& j) {
    RouterTrainMeta meta;
    const auto& tm = j.at("train_meta");
    meta.seed = tm.at("seed").get<std::uint64_t>();
    meta.epochs = tm.at("epochs").get<int>();
    meta.split = tm.at("split").get<double>();
    meta.lr = tm.at("lr").get<double>();
    meta.batch_size = tm.at("batch_size").get<int>();
    RouterModel m(j.at("classes").get<int>(),
                  j.at("preprocess_params").at("hash_dim").get<std::size_t>(), meta);
    m.weights_ = j.at("weights").get<std::vector<double>>();
    m.biases_ = j.at("biases").get<std::vector<double>>();
    if (m.weights_.size() != static_cast<std::size_t>(m.classes_) * m.hash_dim_ ||
        m.biases_.size() != static_cast<std::size_t>(m.classes_)) {
      throw std::runtime_error("router json: weight shape mismatch");
    }
    return m;
  }

 private:
  int classes_ = 0;
  std::size_t hash_dim_ = 0;
  std::vector<double> weights_;  // classes x hash_dim, row-major
  std::vector<double> biases_;
  RouterTrainMeta meta_;
};

struct RouterTrainConfig {
  double split = 0.8;  // train fraction
  int epochs = 20;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::size_t hash_dim = 4096;
  int batch_size = 32;
};

// Trains the classifier with mini-batch gradient descent on cross-entropy.
// Records must carry labels in true_label. Returns the model and the
// held-out accuracy on the validation split.
inline std::pair<RouterModel, double> train_router(
    const std::vector<PromptRecord>& records, const RouterTrainConfig& cfg) {
  if (!(cfg.split > 0.0 && cfg.split < 1.0)) {
    throw std::invalid_argument("train_router: split must be in (0,1)");
  }
  std::vector<std::size_t> idx;
  std::set<int> label_set;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].true_label) {
      throw std::invalid_argument("train_router: record without label");
    }
    label_set.insert(*records[i].true_label);
    idx.push_back(i);
  }
  if (label_set.size() < 2) {
    throw std::invalid_argument("train_router: need at least 2 classes");
  }
  // Labels must be dense 0..k-1 so they index the weight rows directly.
  const int k = static_cast<int>(label_set.size());
  if (*label_set.begin() != 0 || *label_set.rbegin() != k - 1) {
    throw std::invalid_argument("train_router: labels must be dense 0..k-1");
  }

  SplitMix64 rng(cfg.seed);
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.below(i)]);
  }
  const auto n_train = static_cast<std::size_t>(
      std::max<double>(1.0, std::floor(cfg.split * static_cast<double>(idx.size()))));
  if (n_train >= idx.size()) {
    throw std::invalid_argument("train_router: validation split is empty");
  }

  RouterTrainMeta meta{cfg.seed, cfg.epochs, cfg.split, cfg.lr, cfg.batch_size};
  RouterModel model(k, cfg.hash_dim, meta);

  std::vector<std::map<std::size_t, double>> feats(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    feats[i] = model.features(records[i].input);
  }

  std::vector<std::size_t> train_idx(idx.begin(),
                                     idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  const std::vector<std::size_t> val_idx(
      idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());

  auto& w = model.weights();
  auto& b = model.biases();
  const std::size_t d = cfg.hash_dim;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = train_idx.size(); i > 1; --i) {
      std::swap(train_idx[i - 1], train_idx[rng.below(i)]);
    }
    for (std::size_t start = 0; start < train_idx.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(train_idx.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      // Accumulate the batch gradient sparsely: err_c * x for each example.
      std::vector<double> bias_grad(static_cast<std::size_t>(k), 0.0);
      std::map<std::size_t, std::vector<double>> w_grad;  // feature -> per-class
      for (std::size_t t = start; t < end; ++t) {
        const std::size_t i = train_idx[t];
        const ProbVector prob = RouterModel::softmax(model.scores(feats[i]));
        const int y = *records[i].true_label;
        for (int c = 0; c < k; ++c) {
          const double err =
              prob[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
          bias_grad[static_cast<std::size_t>(c)] += err;
          if (err == 0.0) continue;
          for (const auto& [fidx, fval] : feats[i]) {
            auto& g = w_grad[fidx];
            if (g.empty()) g.assign(static_cast<std::size_t>(k), 0.0);
            g[static_cast<std::size_t>(c)] += err * fval;
          }
        }
      }
      for (int c = 0; c < k; ++c) {
        b[static_cast<std::size_t>(c)] -=
            cfg.lr * inv_batch * bias_grad[static_cast<std::size_t>(c)];
      }
      for (const auto& [fidx, g] : w_grad) {
        for (int c = 0; c < k; ++c) {
          w[static_cast<std::size_t>(c) * d + fidx] -=
              cfg.lr * inv_batch * g[static_cast<std::size_t>(c)];
        }
      }
    }
  }

  std::size_t correct = 0;
  for (std::size_t i : val_idx) {
    const ProbVector prob = RouterModel::softmax(model.scores(feats[i]));
    if (greedy_token(prob) == *records[i].true_label) ++correct;
  }
  const double val_acc =
      static_cast<double>(correct) / static_cast<double>(val_idx.size());
  return {std::move(model), val_acc};
}

struct RouteDecision {
  int cluster = 0;
  const LanguageModel* model = nullptr;
  bool via_tag = false;
};

// Explicit tags bypass the classifier entirely; unknown tags are an error.
// Untagged records are classified and routed to the matching adapted draft.
inline RouteDecision route(const RouterModel& router, const PromptRecord& record,
                           const DraftSet& drafts) {
  RouteDecision d;
  if (record.explicit_tag) {
    auto it = drafts.tag_to_cluster.find(*record.explicit_tag);
    if (it == drafts.tag_to_cluster.end()) {
      throw std::invalid_argument("unknown task tag '" + *record.explicit_tag + "'");
    }
    d.cluster = it->second;
    d.via_tag = true;
  } else {
    if (router.classes() != drafts.k()) {
      throw std::invalid_argument("router/draft set class count mismatch");
    }
    d.cluster = router.classify(record.input).label;
  }
  d.model = &drafts.draft_for(d.cluster);
  return d;
}

}  // namespace taskspec
