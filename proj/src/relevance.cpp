#include "clir/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "clir/error.hpp"
#include "clir/numeric.hpp"

namespace clir {

namespace {

void require_lexical(const Query& q) {
  if (q.kind != QueryKind::lexical)
    throw UnsupportedQuery("query '" + q.id + "': unsupported query type " + std::string(to_string(q.kind)));
}

}  // namespace

std::vector<double> RankedList::probs() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.prob);
  return out;
}

double phrase_sentence_rel(const EvidenceMatrix& ev, const std::string& doc, std::size_t sentence,
                           const QueryPhrase& phrase) {
  const auto* row = ev.row(doc, sentence);
  double log_p = 0.0;
  for (const auto& w : phrase.words) {
    double p = ev.epsilon();
    if (row) {
      const auto it = row->find(w);
      if (it != row->end()) p = it->second;
    }
    log_p += std::log(p);
  }
  return std::exp(log_p);
}

double phrase_doc_rel(const EvidenceMatrix& ev, const Document& doc, const QueryPhrase& phrase) {
  double log_none = 0.0;  // log prod_s (1 - p_s)
  for (std::size_t s = 0; s < doc.size(); ++s) log_none += std::log1p(-phrase_sentence_rel(ev, doc.id, s, phrase));
  return -std::expm1(log_none);
}

double query_doc_rel(const EvidenceMatrix& ev, const Document& doc, const Query& q) {
  require_lexical(q);
  double log_p = 0.0;
  for (const auto& phrase : q.phrases) log_p += std::log(phrase_doc_rel(ev, doc, phrase));
  return std::exp(log_p);
}

void sort_ranked(std::vector<RankedEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    return a.prob != b.prob ? a.prob > b.prob : a.doc < b.doc;
  });
}

RankedList rank(const EvidenceMatrix& ev, const Corpus& corpus, const Query& q) {
  require_lexical(q);
  if (corpus.empty()) throw DataError("rank: empty corpus");
  RankedList list{q.id, {}};
  list.entries.reserve(corpus.size());
  for (const auto& doc : corpus) list.entries.push_back({doc.id, query_doc_rel(ev, doc, q)});
  sort_ranked(list.entries);
  return list;
}

void write_run(std::ostream& out, const RankedList& list, const std::string& run_tag) {
  for (std::size_t i = 0; i < list.entries.size(); ++i)
    out << list.query << ' ' << list.entries[i].doc << ' ' << (i + 1) << ' ' << format_double(list.entries[i].prob)
        << ' ' << run_tag << '\n';
}

}  // namespace clir
