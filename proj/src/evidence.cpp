#include "clir/evidence.hpp"

#include <algorithm>
#include <set>

#include "clir/error.hpp"

namespace clir {

namespace {

void take_max(SparseEvidence& out, const Token& word, double value) {
  auto [it, inserted] = out.emplace(word, value);
  if (!inserted && value > it->second) it->second = value;
}

std::vector<std::pair<Token, double>> restrict_to(const SparseEvidence& all, std::span<const Token> words) {
  std::vector<std::pair<Token, double>> out;
  for (const auto& w : words) {
    const auto it = all.find(w);
    if (it != all.end()) out.emplace_back(w, it->second);
  }
  return out;
}

}  // namespace

SparseEvidence tt_evidence(const TranslationTable& table, const Sentence& s) {
  SparseEvidence out;
  for (const auto& f : s)
    if (const auto* row = table.find(f))
      for (const auto& e : *row) take_max(out, e.english, e.prob);
  return out;
}

SparseEvidence cn_evidence(const TranslationTable& table, const ConfusionNetwork& cn) {
  SparseEvidence out;
  for (const auto& slot : cn.slots)
    for (const auto& arc : slot)
      if (const auto* row = table.find(arc.token))
        for (const auto& e : *row) take_max(out, e.english, e.prob * arc.prob);
  return out;
}

TranslationTableGenerator::TranslationTableGenerator(const TranslationTable& table, std::string tag)
    : table_(table), tag_(tag.empty() ? "tt:" + table.source_tag() : std::move(tag)) {}

std::vector<std::pair<Token, double>> TranslationTableGenerator::evaluate(
    const Document& doc, std::size_t unit, std::span<const Token> words) const {
  if (doc.kind == DocumentKind::text) return restrict_to(tt_evidence(table_, doc.sentences.at(unit)), words);
  return restrict_to(cn_evidence(table_, doc.utterances.at(unit)), words);
}

std::vector<Token> query_words(std::span<const Query> queries) {
  std::set<Token> words;
  for (const auto& q : queries)
    for (const auto& p : q.phrases) words.insert(p.words.begin(), p.words.end());
  return {words.begin(), words.end()};
}

EvidenceMatrix build_evidence(const EvidenceGenerator& generator, const Corpus& corpus,
                              std::span<const Query> queries, double eps) {
  const auto words = query_words(queries);
  return build_evidence_for_words(generator, corpus, words, eps);
}

EvidenceMatrix build_evidence_for_words(const EvidenceGenerator& generator, const Corpus& corpus,
                                        std::span<const Token> words, double eps) {
  EvidenceMatrix m(generator.tag(), eps);
  if (words.empty()) return m;
  for (const auto& doc : corpus)
    for (std::size_t unit = 0; unit < doc.size(); ++unit)
      for (const auto& [word, p] : generator.evaluate(doc, unit, words)) m.set(doc.id, unit, word, p);
  return m;
}

Corpus bitext_corpus(const Bitext& bitext) {
  Document doc;
  doc.id = kBitextDocId;
  doc.kind = DocumentKind::text;
  doc.sentences.reserve(bitext.size());
  for (const auto& p : bitext) doc.sentences.push_back(p.foreign);
  Corpus c;
  c.add(std::move(doc));
  return c;
}

}  // namespace clir
