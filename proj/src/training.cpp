#include "clir/training.hpp"

#include <algorithm>
#include <unordered_set>

namespace clir {

std::vector<LabeledInstance> sample_instances(const Bitext& bitext, const Vocabulary& vocab,
                                              std::size_t negatives_per_positive,
                                              std::mt19937_64& rng) {
  std::vector<LabeledInstance> out;
  if (vocab.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  for (std::size_t i = 0; i < bitext.size(); ++i) {
    std::vector<std::size_t> positives;
    for (const auto& t : bitext[i].english)
      if (auto idx = vocab.index(t)) positives.push_back(*idx);
    std::sort(positives.begin(), positives.end());
    positives.erase(std::unique(positives.begin(), positives.end()), positives.end());
    for (auto w : positives) out.push_back({i, w, true});

    if (positives.size() == vocab.size()) continue;  // nothing left to sample from
    const std::unordered_set<std::size_t> in_sentence(positives.begin(), positives.end());
    const std::size_t wanted = positives.size() * negatives_per_positive;
    for (std::size_t n = 0; n < wanted; ++n) {
      std::size_t w = pick(rng);
      while (in_sentence.count(w)) w = pick(rng);
      out.push_back({i, w, false});
    }
  }
  return out;
}

}  // namespace clir
