#include "clir/scorer.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <iterator>

#include "clir/error.hpp"

namespace clir {

QueryScore score_query(const std::set<std::string>& returned, const std::set<std::string>& gold,
                       std::size_t corpus_size, double beta, const std::string& query) {
  if (gold.empty()) throw DataError("query '" + query + "': no relevant documents, p_miss undefined");
  if (corpus_size <= gold.size())
    throw DataError("query '" + query + "': every document is relevant, p_fa undefined");
  QueryScore s;
  s.query = query;
  s.n_r = gold.size();
  std::vector<std::string> hits;
  std::set_intersection(returned.begin(), returned.end(), gold.begin(), gold.end(), std::back_inserter(hits));
  s.n_t = hits.size();
  s.n_f = returned.size() - s.n_t;
  s.p_miss = static_cast<double>(s.n_r - s.n_t) / static_cast<double>(s.n_r);
  s.p_fa = static_cast<double>(s.n_f) / static_cast<double>(corpus_size - s.n_r);
  s.qv = 1.0 - (s.p_miss + beta * s.p_fa);
  return s;
}

RunScore score_run(const ReturnedSets& returned, const Judgments& judgments, const Corpus& corpus, double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
  for (const auto& [query, docs] : returned) {
    if (!judgments.count(query)) throw DataError("returned set for unjudged query '" + query + "'");
    for (const auto& d : docs)
      if (!corpus.contains(d)) throw DataError("query '" + query + "' returned unknown document '" + d + "'");
  }
  validate_judgments(judgments, corpus);

  RunScore run;
  run.beta = beta;
  static const std::set<std::string> kNothing;
  double sum = 0.0;
  for (const auto& [query, gold] : judgments) {
    if (gold.empty()) {
      std::cerr << "warning: query '" << query << "' has no relevant documents; excluded from mAQWV\n";
      run.excluded.push_back(query);
      continue;
    }
    const auto it = returned.find(query);
    run.queries.push_back(score_query(it == returned.end() ? kNothing : it->second, gold, corpus.size(), beta, query));
    sum += run.queries.back().qv;
  }
  run.n_q = run.queries.size();
  if (run.n_q == 0) throw DataError("no scorable queries (every judged query has an empty gold set)");
  run.maqwv = sum / static_cast<double>(run.n_q);
  return run;
}

void write_score_report(std::ostream& out, const RunScore& score) {
  out << "query-id\tn_r\tn_t\tn_f\tp_miss\tp_fa\tqv\n";
  for (const auto& q : score.queries)
    out << q.query << '\t' << q.n_r << '\t' << q.n_t << '\t' << q.n_f << '\t' << format_double(q.p_miss) << '\t'
        << format_double(q.p_fa) << '\t' << format_double(q.qv) << '\n';
  out << "mAQWV=" << format_decimal(score.maqwv) << " beta=" << format_decimal(score.beta) << " n_q=" << score.n_q
      << '\n';
}

ReturnedSets load_returned(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open for reading");
  ReturnedSets out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos)
      throw DataError(located(path, number, "expected query<TAB>doc"));
    out[line.substr(0, tab)].insert(line.substr(tab + 1));
  }
  return out;
}

}  // namespace clir
