#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/vocabulary.hpp"

namespace clir {

/// One (bitext pair, English word) training instance.
struct LabeledInstance {
  std::size_t pair = 0;
  std::size_t word = 0;  // vocabulary index
  bool relevant = false;

  friend bool operator==(const LabeledInstance&, const LabeledInstance&) = default;
};

/// Positives are the distinct vocabulary words of each English side;
/// `negatives_per_positive` negatives per positive are drawn uniformly (with
/// replacement) from the vocabulary minus that English side.
std::vector<LabeledInstance> sample_instances(const Bitext& bitext, const Vocabulary& vocab,
                                              std::size_t negatives_per_positive,
                                              std::mt19937_64& rng);

}  // namespace clir
