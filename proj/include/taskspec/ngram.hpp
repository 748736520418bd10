#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "taskspec/det_random.hpp"
#include "taskspec/language_model.hpp"

namespace taskspec {

namespace detail {

struct ContextHash {
  std::size_t operator()(const std::vector<TokenId>& ctx) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (TokenId t : ctx) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(t));
      h *= 0x100000001b3ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

// Interpolated (Jelinek-Mercer) n-gram language model with a fixed mixing
// weight lambda. Counts are kept for every context length 0..order-1;
// next_distribution interpolates
//     p_m = lambda * MLE_m + (1 - lambda) * p_{m-1}
// from the empty context upward, bottoming out at the uniform distribution
// 1/|V|. A context with no counts at some level defers to the level below
// with weight 1, which keeps the result normalized.
class NgramModel : public LanguageModel {
 public:
  struct CountRow {
    std::unordered_map<TokenId, std::uint64_t> token_counts;
    std::uint64_t total = 0;
  };
  using CountTable =
      std::unordered_map<std::vector<TokenId>, CountRow, detail::ContextHash>;

  int order() const { return order_; }
  double lambda() const { return lambda_; }
  const Vocab& vocab() const override { return vocab_; }
  const CountTable& counts() const { return counts_; }

  ProbVector next_distribution(std::span<const TokenId> context) const override {
    const std::size_t vsize = vocab_.size();
    ProbVector p(vsize, 1.0 / static_cast<double>(vsize));

    // Effective context: BOS-padded on the left to order-1 ids, matching the
    // padding applied during training.
    const std::size_t ctx_len = static_cast<std::size_t>(order_ - 1);
    std::vector<TokenId> ctx(ctx_len, Vocab::kBos);
    const std::size_t take = std::min(context.size(), ctx_len);
    for (std::size_t i = 0; i < take; ++i) {
      ctx[ctx_len - take + i] = context[context.size() - take + i];
    }

    std::vector<TokenId> key;
    for (std::size_t level = 0; level <= ctx_len; ++level) {
      key.assign(ctx.end() - static_cast<std::ptrdiff_t>(level), ctx.end());
      auto it = counts_.find(key);
      if (it == counts_.end() || it->second.total == 0) continue;
      const double total = static_cast<double>(it->second.total);
      for (double& x : p) x *= 1.0 - lambda_;
      for (const auto& [tok, cnt] : it->second.token_counts) {
        p[static_cast<std::size_t>(tok)] +=
            lambda_ * static_cast<double>(cnt) / total;
      }
    }
    return p;
  }

  bool operator==(const NgramModel& other) const {
    if (order_ != other.order_ || lambda_ != other.lambda_ || !(vocab_ == other.vocab_) ||
        counts_.size() != other.counts_.size()) {
      return false;
    }
    for (const auto& [ctx, row] : counts_) {
      auto it = other.counts_.find(ctx);
      if (it == other.counts_.end() || it->second.total != row.total ||
          it->second.token_counts != row.token_counts) {
        return false;
      }
    }
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [ctx, row] : counts_) {
      std::string key;
      for (std::size_t i = 0; i < ctx.size(); ++i) {
        if (i > 0) key += ' ';
        key += std::to_string(ctx[i]);
      }
      nlohmann::json inner = nlohmann::json::object();
      // std::map ordering keeps the dump deterministic.
      std::map<TokenId, std::uint64_t> sorted(row.token_counts.begin(),
                                              row.token_counts.end());
      for (const auto& [tok, cnt] : sorted) inner[std::to_string(tok)] = cnt;
      counts[key] = std::move(inner);
    }
    return nlohmann::json{{"order", order_},
                          {"lambda", lambda_},
                          {"vocab", vocab_.to_json()},
                          {"counts", std::move(counts)}};
  }

  static NgramModel from_json(const nlohmann::json& j) {
    NgramModel m;
    m.order_ = j.at("order").get<int>();
    m.lambda_ = j.at("lambda").get<double>();
    m.vocab_ = Vocab::from_json(j.at("vocab"));
    if (m.order_ < 1) throw std::runtime_error("ngram json: order must be >= 1");
    if (!(m.lambda_ > 0.0 && m.lambda_ < 1.0)) {
      throw std::runtime_error("ngram json: lambda must be in (0,1)");
    }
    for (const auto& [key, inner] : j.at("counts").items()) {
      std::vector<TokenId> ctx;
      std::istringstream iss(key);
      std::string part;
      while (iss >> part) ctx.push_back(static_cast<TokenId>(std::stol(part)));
      if (ctx.size() >= static_cast<std::size_t>(m.order_)) {
        throw std::runtime_error("ngram json: context longer than order-1");
      }
      CountRow row;
      for (const auto& [tok, cnt] : inner.items()) {
        const auto id = static_cast<TokenId>(std::stol(tok));
        const auto c = cnt.get<std::uint64_t>();
        row.token_counts[id] = c;
        row.total += c;
      }
      if (row.total == 0) throw std::runtime_error("ngram json: empty count row");
      m.counts_.emplace(std::move(ctx), std::move(row));
    }
    return m;
  }

  void save(std::ostream& os) const { os << to_json().dump(2) << '\n'; }

  static NgramModel load(std::istream& is) {
    nlohmann::json j;
    is >> j;
    return from_json(j);
  }

  // Assembles a model from an explicit count table (synthetic generators,
  // tests). Rows with zero totals are rejected.
  static NgramModel from_counts(int order, double lambda, Vocab vocab,
                                CountTable counts) {
    validate_params(order, lambda);
    for (const auto& [ctx, row] : counts) {
      if (ctx.size() >= static_cast<std::size_t>(order)) {
        throw std::invalid_argument("from_counts: context longer than order-1");
      }
      std::uint64_t total = 0;
      for (const auto& [tok, cnt] : row.token_counts) {
        if (tok < 0 || static_cast<std::size_t>(tok) >= vocab.size()) {
          throw std::invalid_argument("from_counts: token id outside vocab");
        }
        total += cnt;
      }
      if (total != row.total || total == 0) {
        throw std::invalid_argument("from_counts: row total mismatch or zero");
      }
    }
    NgramModel m;
    m.order_ = order;
    m.lambda_ = lambda;
    m.vocab_ = std::move(vocab);
    m.counts_ = std::move(counts);
    return m;
  }

  friend NgramModel train_ngram(const std::vector<std::vector<TokenId>>& corpus,
                                int order, double lambda, Vocab vocab);

 private:
  NgramModel() = default;

  static void validate_params(int order, double lambda) {
    if (order < 1) throw std::invalid_argument("ngram order must be >= 1");
    if (!(lambda > 0.0 && lambda < 1.0)) {
      throw std::invalid_argument("ngram lambda must be in (0,1)");
    }
  }

  int order_ = 1;
  double lambda_ = 0.9;
  Vocab vocab_;
  CountTable counts_;
};

// Accumulates counts for all context lengths 0..order-1. Every sequence is
// padded with order-1 BOS ids and terminated with EOS; BOS is context only,
// never a predicted token.
inline NgramModel train_ngram(const std::vector<std::vector<TokenId>>& corpus,
                              int order, double lambda, Vocab vocab) {
  NgramModel::validate_params(order, lambda);
  if (corpus.empty()) throw std::invalid_argument("empty training corpus");

  NgramModel m;
  m.order_ = order;
  m.lambda_ = lambda;
  m.vocab_ = std::move(vocab);

  const std::size_t pad = static_cast<std::size_t>(order - 1);
  std::vector<TokenId> seq;
  for (const auto& tokens : corpus) {
    seq.assign(pad, Vocab::kBos);
    seq.insert(seq.end(), tokens.begin(), tokens.end());
    seq.push_back(Vocab::kEos);
    for (std::size_t i = pad; i < seq.size(); ++i) {
      const TokenId tok = seq[i];
      if (tok < 0 || static_cast<std::size_t>(tok) >= m.vocab_.size()) {
        throw std::invalid_argument("train_ngram: token id outside vocab");
      }
      for (std::size_t len = 0; len <= pad; ++len) {
        std::vector<TokenId> ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - len),
                                 seq.begin() + static_cast<std::ptrdiff_t>(i));
        auto& row = m.counts_[std::move(ctx)];
        row.token_counts[tok] += 1;
        row.total += 1;
      }
    }
  }
  return m;
}

// Convenience: builds the vocabulary from the documents, then trains.
inline NgramModel train_ngram_text(const std::vector<std::string>& docs, int order,
                                   double lambda) {
  Vocab vocab = build_vocab(docs);
  std::vector<std::vector<TokenId>> corpus;
  corpus.reserve(docs.size());
  for (const auto& doc : docs) corpus.push_back(tokenize(doc, vocab));
  return train_ngram(corpus, order, lambda, std::move(vocab));
}

}  // namespace taskspec
