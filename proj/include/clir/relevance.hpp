#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/evidence_matrix.hpp"

namespace clir {

struct RankedEntry {
  std::string doc;
  double prob = 0.0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

/// Documents by descending relevance, ties by ascending id.
struct RankedList {
  std::string query;
  std::vector<RankedEntry> entries;

  std::vector<double> probs() const;
  friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// Product over phrase words of p(rel | sentence, word).
double phrase_sentence_rel(const EvidenceMatrix& ev, const std::string& doc, std::size_t sentence,
                           const QueryPhrase& phrase);

/// 1 - prod over sentences of (1 - phrase_sentence_rel).
double phrase_doc_rel(const EvidenceMatrix& ev, const Document& doc, const QueryPhrase& phrase);

/// Product over phrases of phrase_doc_rel. Throws UnsupportedQuery for
/// non-lexical queries.
double query_doc_rel(const EvidenceMatrix& ev, const Document& doc, const Query& q);

/// Throws DataError on an empty corpus, UnsupportedQuery on non-lexical queries.
RankedList rank(const EvidenceMatrix& ev, const Corpus& corpus, const Query& q);

/// Sorts in place by the RankedList ordering rule.
void sort_ranked(std::vector<RankedEntry>& entries);

/// `query doc rank prob tag` per line, whitespace-separated, rank from 1.
void write_run(std::ostream& out, const RankedList& list, const std::string& run_tag);

}  // namespace clir
