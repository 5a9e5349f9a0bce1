#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/mt_ensemble.hpp"

namespace clir {

/// Knobs for the synthetic dataset generator. Output is a pure function of
/// this struct.
struct SynthSpec {
  unsigned long long seed = 1;
  std::size_t foreign_vocab = 2000;
  std::size_t english_vocab = 2000;
  double noise = 0.0;  // dictionary, confusion-network and MT corruption rate
  std::size_t docs = 200;
  std::size_t min_sentences = 2;
  std::size_t max_sentences = 6;
  std::size_t min_sentence_len = 5;
  std::size_t max_sentence_len = 12;
  std::size_t queries = 20;
  std::size_t max_phrases = 2;
  std::size_t max_phrase_len = 2;
  double multiword_rate = 0.4;  // chance a phrase has more than one word
  double speech_fraction = 0.0;
  std::size_t confusion_depth = 3;  // arcs per slot
  double relevance_rate = 0.05;     // chance a document is planted for a query
  std::size_t bitext_pairs = 600;   // training bitext for the searcher
  std::size_t heldout_pairs = 200;  // held-out bitext for the MT ensemble and the mixture
  std::size_t tables = 1;           // independently perturbed aligner tables

  /// Throws ConfigError on an inconsistent spec.
  void validate() const;
};

struct SynthDataset {
  Corpus corpus;
  Bitext bitext;
  Bitext heldout;
  std::vector<TranslationTable> tables;
  /// Covers every corpus sentence and every held-out pair (under kBitextDocId).
  MtHypothesisSet hypotheses;
  std::vector<Query> queries;
  Judgments judgments;
};

SynthDataset generate(const SynthSpec& spec);

/// Writes corpus.jsonl, bitext.tsv, heldout.tsv, table<N>.tsv, mt.tsv, queries.tsv and
/// judgments.tsv into `dir` (created if missing).
void write_dataset(const std::string& dir, const SynthDataset& data);

}  // namespace clir
