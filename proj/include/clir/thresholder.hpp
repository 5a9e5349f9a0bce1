#pragma once

#include <cstddef>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "clir/numeric.hpp"
#include "clir/relevance.hpp"

namespace clir {

inline constexpr double kDefaultBeta = 40.0;
inline constexpr double kDefaultGamma = 1.3;

struct ThresholdConfig {
  double beta = kDefaultBeta;    // false-alarm cost relative to a miss
  double gamma = kDefaultGamma;  // scale on the expected number of relevant documents
  double eps = kEpsilon;

  /// Throws ConfigError unless beta > 0, gamma > 0 and 0 < eps < 0.5.
  void validate() const;
};

struct CutoffDecision {
  std::string query;
  std::size_t k = 0;
  double expected_qv = 0.0;
  std::vector<double> e_miss;  // N + 1 entries, indexed by k
  std::vector<double> e_fa;
  double e_rel = 0.0;
  std::vector<double> curve;  // expected QV for every k
};

/// Picks the smallest k maximizing expected QV over the top-k prefixes.
CutoffDecision decide(const RankedList& list, const ThresholdConfig& cfg);

/// (k, expected QV(k)) for k = 0..N.
std::vector<std::pair<std::size_t, double>> expected_qv_curve(const RankedList& list,
                                                              const ThresholdConfig& cfg);

/// The top-k document ids.
std::vector<std::string> returned_documents(const RankedList& list, const CutoffDecision& d);

/// `query<TAB>k<TAB>expected_qv`.
void write_cutoff(std::ostream& out, const CutoffDecision& d);

}  // namespace clir
