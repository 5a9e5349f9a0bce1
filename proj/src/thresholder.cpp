#include "clir/thresholder.hpp"

#include <algorithm>
#include <ostream>

#include "clir/error.hpp"

namespace clir {

void ThresholdConfig::validate() const {
  if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
  if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("epsilon must lie in (0, 0.5)");
}

CutoffDecision decide(const RankedList& list, const ThresholdConfig& cfg) {
  cfg.validate();
  const std::size_t n = list.entries.size();
  if (n == 0) throw DataError("decide: query '" + list.query + "' has an empty ranked list");
  for (std::size_t i = 1; i < n; ++i)
    if (list.entries[i].prob > list.entries[i - 1].prob)
      throw DataError("decide: ranked list for query '" + list.query + "' is not sorted by probability");

  CutoffDecision d;
  d.query = list.query;
  d.e_miss.assign(n + 1, 0.0);
  d.e_fa.assign(n + 1, 0.0);
  // Misses accumulate from the tail, false alarms from the head.
  for (std::size_t k = n; k-- > 0;) d.e_miss[k] = d.e_miss[k + 1] + list.entries[k].prob;
  for (std::size_t k = 1; k <= n; ++k) d.e_fa[k] = d.e_fa[k - 1] + (1.0 - list.entries[k - 1].prob);
  d.e_rel = d.e_miss[0];

  const double total = static_cast<double>(n);
  const double scaled_rel = std::clamp(cfg.gamma * d.e_rel, cfg.eps, total - cfg.eps);
  const double non_rel = total - scaled_rel;

  d.curve.resize(n + 1);
  d.k = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double p_miss = d.e_miss[k] / scaled_rel;
    const double p_fa = d.e_fa[k] / non_rel;
    d.curve[k] = 1.0 - (p_miss + cfg.beta * p_fa);
    if (d.curve[k] > d.curve[d.k]) d.k = k;
  }
  d.expected_qv = d.curve[d.k];
  return d;
}

std::vector<std::pair<std::size_t, double>> expected_qv_curve(const RankedList& list, const ThresholdConfig& cfg) {
  const auto d = decide(list, cfg);
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(d.curve.size());
  for (std::size_t k = 0; k < d.curve.size(); ++k) out.emplace_back(k, d.curve[k]);
  return out;
}

std::vector<std::string> returned_documents(const RankedList& list, const CutoffDecision& d) {
  std::vector<std::string> out;
  out.reserve(d.k);
  for (std::size_t i = 0; i < d.k && i < list.entries.size(); ++i) out.push_back(list.entries[i].doc);
  return out;
}

void write_cutoff(std::ostream& out, const CutoffDecision& d) {
  out << d.query << '\t' << d.k << '\t' << format_double(d.expected_qv) << '\n';
}

}  // namespace clir
