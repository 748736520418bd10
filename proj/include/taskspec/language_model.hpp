#pragma once

#include <span>

#include "taskspec/prob.hpp"
#include "taskspec/vocab.hpp"

namespace taskspec {

// Opaque next-token distribution provider. Both decode roles (target and
// draft) see models only through this interface. Implementations are
// immutable after construction and safe to share across decode sessions.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const Vocab& vocab() const = 0;

  // Distribution over the next token given `context` (any length; models use
  // as much of the tail as they can).
  virtual ProbVector next_distribution(std::span<const TokenId> context) const = 0;
};

}  // namespace taskspec
