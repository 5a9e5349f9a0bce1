#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/evidence_matrix.hpp"

namespace clir {

using SparseEvidence = std::map<Token, double>;

/// p_tt(rel | s, e) = max over foreign tokens f in s of p(e | f).
SparseEvidence tt_evidence(const TranslationTable& table, const Sentence& s);

/// Speech variant: max over every arc (f, p(f)) of the network of p(e | f) * p(f).
SparseEvidence cn_evidence(const TranslationTable& table, const ConfusionNetwork& cn);

/// A source of p(rel | sentence, english word).
class EvidenceGenerator {
 public:
  virtual ~EvidenceGenerator() = default;

  virtual std::string tag() const = 0;

  /// Values for `words` on sentence-like unit `unit` of `doc`. Words with no
  /// evidence may be left out of the result.
  virtual std::vector<std::pair<Token, double>> evaluate(const Document& doc, std::size_t unit,
                                                         std::span<const Token> words) const = 0;
};

/// Translation-table evidence; text sentences use the sentence max, speech
/// utterances the confusion-network max.
class TranslationTableGenerator final : public EvidenceGenerator {
 public:
  explicit TranslationTableGenerator(const TranslationTable& table, std::string tag = {});

  std::string tag() const override { return tag_; }
  std::vector<std::pair<Token, double>> evaluate(const Document& doc, std::size_t unit,
                                                 std::span<const Token> words) const override;

 private:
  const TranslationTable& table_;
  std::string tag_;
};

/// Sorted, de-duplicated words of every phrase of every query.
std::vector<Token> query_words(std::span<const Query> queries);

/// Evaluates the generator on every (document, unit, query word) and clamps
/// into [eps, 1 - eps].
EvidenceMatrix build_evidence(const EvidenceGenerator& generator, const Corpus& corpus,
                              std::span<const Query> queries, double eps = kEpsilon);

EvidenceMatrix build_evidence_for_words(const EvidenceGenerator& generator, const Corpus& corpus,
                                        std::span<const Token> words, double eps = kEpsilon);

/// Document id under which bitext foreign sides are addressed; sentence
/// index is the pair index.
inline constexpr const char* kBitextDocId = "bitext";

/// The foreign side of a bitext as a one-document text corpus.
Corpus bitext_corpus(const Bitext& bitext);

}  // namespace clir
