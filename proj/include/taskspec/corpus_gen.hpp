#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "taskspec/det_random.hpp"
#include "taskspec/ngram.hpp"
#include "taskspec/records.hpp"

namespace taskspec {

// Synthetic multi-domain corpus: k Markov chains over mostly disjoint
// vocabularies. Shared tokens are deliberately frequent and followed by
// domain-specific continuations, so a draft trained on the union sees
// conflicting successor statistics exactly where domains overlap.
struct CorpusSpec {
  int k_domains = 4;
  int docs_per_domain = 400;
  int vocab_per_domain = 120;
  double overlap_fraction = 0.1;
  int generator_order = 2;
  std::uint64_t seed = 42;
  int doc_len_min = 12;
  int doc_len_max = 24;
};

struct GeneratedCorpus {
  Vocab vocab;                        // union vocabulary, shared by all models
  std::vector<NgramModel> generators; // per-domain fits of the sampled stream
  std::vector<PromptRecord> records;  // input = document text, label = domain
  std::vector<std::string> domain_tags;
};

namespace detail {

struct TokenChain {
  std::vector<TokenId> starters;
  // successor ids and weights, parallel arrays per source token
  std::vector<std::vector<TokenId>> succ;
  std::vector<std::vector<double>> weight;

  TokenId step(TokenId from, SplitMix64& rng) const {
    const auto& s = succ[static_cast<std::size_t>(from)];
    const auto& w = weight[static_cast<std::size_t>(from)];
    double total = 0.0;
    for (double x : w) total += x;
    double r = rng.uniform() * total;
    for (std::size_t i = 0; i < s.size(); ++i) {
      r -= w[i];
      if (r <= 0.0) return s[i];
    }
    return s.back();
  }
};

}  // namespace detail

inline GeneratedCorpus gen_corpus(const CorpusSpec& spec) {
  if (spec.k_domains < 1) throw std::invalid_argument("gen_corpus: k_domains >= 1");
  if (spec.docs_per_domain < 1) throw std::invalid_argument("gen_corpus: docs_per_domain >= 1");
  if (spec.overlap_fraction < 0.0 || spec.overlap_fraction > 1.0) {
    throw std::invalid_argument("gen_corpus: overlap_fraction in [0,1]");
  }
  if (spec.generator_order < 1) throw std::invalid_argument("gen_corpus: generator_order >= 1");
  if (spec.doc_len_min < 2 || spec.doc_len_max < spec.doc_len_min) {
    throw std::invalid_argument("gen_corpus: bad document length bounds");
  }
  const int n_shared = static_cast<int>(
      spec.overlap_fraction * static_cast<double>(spec.vocab_per_domain) + 0.5);
  const int n_unique = spec.vocab_per_domain - n_shared;
  if (n_unique < 8 || n_unique < 2 * spec.generator_order) {
    throw std::invalid_argument("gen_corpus: domain vocabulary too small for generator order");
  }

  GeneratedCorpus out;
  std::vector<TokenId> shared_ids;
  for (int i = 0; i < n_shared; ++i) {
    shared_ids.push_back(out.vocab.add("sh_w" + std::to_string(i)));
  }
  std::vector<std::vector<TokenId>> unique_ids(static_cast<std::size_t>(spec.k_domains));
  for (int d = 0; d < spec.k_domains; ++d) {
    for (int i = 0; i < n_unique; ++i) {
      unique_ids[static_cast<std::size_t>(d)].push_back(
          out.vocab.add("d" + std::to_string(d) + "_w" + std::to_string(i)));
    }
    out.domain_tags.push_back("domain" + std::to_string(d));
  }

  const std::size_t vsize = out.vocab.size();
  std::vector<std::vector<std::vector<TokenId>>> domain_docs(
      static_cast<std::size_t>(spec.k_domains));

  for (int d = 0; d < spec.k_domains; ++d) {
    const auto& uniq = unique_ids[static_cast<std::size_t>(d)];
    SplitMix64 rng(seed_stream(spec.seed, 0xC0A1ul, static_cast<std::uint64_t>(d)));

    detail::TokenChain chain;
    chain.succ.assign(vsize, {});
    chain.weight.assign(vsize, {});
    auto pick_unique = [&] { return uniq[rng.below(uniq.size())]; };

    // Unique tokens: mostly in-domain continuations, with a healthy chance
    // of stepping onto a shared token.
    for (TokenId t : uniq) {
      auto& s = chain.succ[static_cast<std::size_t>(t)];
      auto& w = chain.weight[static_cast<std::size_t>(t)];
      for (int i = 0; i < 3; ++i) {
        s.push_back(pick_unique());
        w.push_back(1.0 + static_cast<double>(rng.below(9)));
      }
      if (!shared_ids.empty()) {
        s.push_back(shared_ids[rng.below(shared_ids.size())]);
        w.push_back(3.0 + static_cast<double>(rng.below(6)));
      }
    }
    // Shared tokens: continuations are domain-unique, so the same shared
    // token leads different places in different domains.
    for (TokenId t : shared_ids) {
      auto& s = chain.succ[static_cast<std::size_t>(t)];
      auto& w = chain.weight[static_cast<std::size_t>(t)];
      for (int i = 0; i < 3; ++i) {
        s.push_back(pick_unique());
        w.push_back(1.0 + static_cast<double>(rng.below(9)));
      }
    }
    for (int i = 0; i < 5; ++i) chain.starters.push_back(pick_unique());

    auto& docs = domain_docs[static_cast<std::size_t>(d)];
    for (int i = 0; i < spec.docs_per_domain; ++i) {
      SplitMix64 doc_rng(seed_stream(spec.seed, static_cast<std::uint64_t>(d),
                                     static_cast<std::uint64_t>(i)));
      const auto len = static_cast<int>(
          static_cast<std::uint64_t>(spec.doc_len_min) +
          doc_rng.below(static_cast<std::uint64_t>(spec.doc_len_max - spec.doc_len_min + 1)));
      std::vector<TokenId> doc;
      TokenId t = chain.starters[doc_rng.below(chain.starters.size())];
      doc.push_back(t);
      for (int j = 1; j < len; ++j) {
        t = chain.step(t, doc_rng);
        doc.push_back(t);
      }
      docs.push_back(std::move(doc));

      PromptRecord rec;
      rec.input = detokenize(docs.back(), out.vocab);
      rec.true_label = d;
      out.records.push_back(std::move(rec));
    }
  }

  // Per-domain generator models: n-gram fits of each domain's stream over
  // the union vocabulary.
  for (int d = 0; d < spec.k_domains; ++d) {
    out.generators.push_back(train_ngram(domain_docs[static_cast<std::size_t>(d)],
                                         spec.generator_order, 0.98, out.vocab));
  }
  return out;
}

}  // namespace taskspec
