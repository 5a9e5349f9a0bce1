#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/thresholder.hpp"

namespace clir {

struct QueryScore {
  std::string query;
  std::size_t n_r = 0;  // gold relevant
  std::size_t n_t = 0;  // returned and relevant
  std::size_t n_f = 0;  // returned, not relevant
  double p_miss = 0.0;
  double p_fa = 0.0;
  double qv = 0.0;
};

/// Throws DataError when gold is empty or covers the whole corpus.
QueryScore score_query(const std::set<std::string>& returned, const std::set<std::string>& gold,
                       std::size_t corpus_size, double beta = kDefaultBeta,
                       const std::string& query = {});

struct RunScore {
  std::vector<QueryScore> queries;
  std::vector<std::string> excluded;  // judged queries with empty gold
  double maqwv = 0.0;
  std::size_t n_q = 0;
  double beta = kDefaultBeta;
};

using ReturnedSets = std::map<std::string, std::set<std::string>>;

/// Scores every judged query with non-empty gold; a query with no returned
/// set counts as returning nothing. Throws DataError when a returned set
/// names an unjudged query or there is nothing to score.
RunScore score_run(const ReturnedSets& returned, const Judgments& judgments, const Corpus& corpus,
                   double beta = kDefaultBeta);

/// Per-query TSV followed by `mAQWV=<v> beta=<v> n_q=<n>`.
void write_score_report(std::ostream& out, const RunScore& score);

/// TSV `query<TAB>doc`, one returned document per line.
ReturnedSets load_returned(const std::string& path);

}  // namespace clir
