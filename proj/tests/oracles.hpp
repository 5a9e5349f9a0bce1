#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

// Slow, direct reference computations used to cross-check the library.

namespace clir::test {

/// P(at least one event) for independent events, by inclusion-exclusion over
/// every non-empty subset. Exponential; keep the input small.
inline double union_by_inclusion_exclusion(const std::vector<double>& p) {
  const std::size_t n = p.size();
  double total = 0.0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double term = 1.0;
    int bits = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        term *= p[i];
        ++bits;
      }
    total += (bits % 2 == 1 ? term : -term);
  }
  return total;
}

/// Expected query value of returning exactly the documents in `mask`, with the
/// expected relevant count fixed to the sum of the probabilities.
inline double subset_expected_qv(const std::vector<double>& p, std::uint32_t mask, double beta) {
  double e_rel = 0.0;
  for (double v : p) e_rel += v;
  const double n = static_cast<double>(p.size());
  double misses = 0.0, false_alarms = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (mask & (1u << i))
      false_alarms += 1.0 - p[i];
    else
      misses += p[i];
  }
  return 1.0 - (misses / e_rel + beta * false_alarms / (n - e_rel));
}

inline double best_subset_expected_qv(const std::vector<double>& p, double beta) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << p.size()); ++mask) {
    const double v = subset_expected_qv(p, mask, beta);
    if (v > best) best = v;
  }
  return best;
}

/// Query value by walking the corpus ids and counting hits and false alarms.
inline double counted_query_value(const std::set<std::string>& returned, const std::set<std::string>& gold,
                                  const std::vector<std::string>& corpus_ids, double beta) {
  int relevant = 0, hits = 0, false_alarms = 0;
  for (const auto& id : corpus_ids) {
    const bool in_gold = gold.count(id) > 0;
    const bool in_returned = returned.count(id) > 0;
    relevant += in_gold;
    hits += in_gold && in_returned;
    false_alarms += !in_gold && in_returned;
  }
  const double n = static_cast<double>(corpus_ids.size());
  return 1.0 - (static_cast<double>(relevant - hits) / relevant + beta * false_alarms / (n - relevant));
}

}  // namespace clir::test
