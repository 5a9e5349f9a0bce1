#include "clir/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>
#include <unordered_map>

#include "clir/error.hpp"
#include "clir/evidence.hpp"

namespace clir {

namespace {

// Independent generator per concern so that, e.g., switching documents to
// speech does not change the text that gets generated.
enum class Stream : unsigned { dictionary = 1, text, bitext, speech, mt, table };

std::mt19937_64 stream(unsigned long long seed, Stream s, unsigned sub = 0) {
  std::seed_seq seq{static_cast<unsigned>(seed & 0xffffffffULL), static_cast<unsigned>(seed >> 32),
                    static_cast<unsigned>(s), sub};
  return std::mt19937_64(seq);
}

std::string word_name(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%c%05zu", prefix, i);
  return buf;
}

bool chance(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

struct Lexicon {
  std::vector<Token> foreign;
  std::vector<Token> english;
  std::vector<std::ptrdiff_t> translation;  // foreign index -> english index, -1 if none
  std::vector<std::size_t> topic;           // foreign indices reserved for queries
  std::vector<std::size_t> background;      // foreign indices in Zipf rank order
  std::unordered_map<Token, std::size_t> foreign_index;
  std::discrete_distribution<std::size_t> zipf;
};

Lexicon build_lexicon(const SynthSpec& spec) {
  auto rng = stream(spec.seed, Stream::dictionary);
  Lexicon lex;
  for (std::size_t i = 0; i < spec.foreign_vocab; ++i) {
    lex.foreign.push_back(word_name('f', i));
    lex.foreign_index.emplace(lex.foreign.back(), i);
  }
  for (std::size_t i = 0; i < spec.english_vocab; ++i) lex.english.push_back(word_name('e', i));

  const std::size_t paired = std::min(spec.foreign_vocab, spec.english_vocab);
  std::vector<std::size_t> english_perm(spec.english_vocab);
  std::iota(english_perm.begin(), english_perm.end(), std::size_t{0});
  std::shuffle(english_perm.begin(), english_perm.end(), rng);
  std::vector<std::size_t> foreign_perm(spec.foreign_vocab);
  std::iota(foreign_perm.begin(), foreign_perm.end(), std::size_t{0});
  std::shuffle(foreign_perm.begin(), foreign_perm.end(), rng);

  lex.translation.assign(spec.foreign_vocab, -1);
  for (std::size_t i = 0; i < paired; ++i)
    lex.translation[foreign_perm[i]] = static_cast<std::ptrdiff_t>(english_perm[i]);

  // The first paired foreign words (in shuffled order) feed queries; the rest
  // are background text with Zipf frequencies.
  const std::size_t topic = spec.queries * spec.max_phrases * spec.max_phrase_len;
  lex.topic.assign(foreign_perm.begin(), foreign_perm.begin() + static_cast<std::ptrdiff_t>(topic));
  lex.background.assign(foreign_perm.begin() + static_cast<std::ptrdiff_t>(topic), foreign_perm.end());
  std::vector<double> weights(lex.background.size());
  for (std::size_t r = 0; r < weights.size(); ++r) weights[r] = 1.0 / static_cast<double>(r + 1);
  lex.zipf = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
  return lex;
}

Sentence background_sentence(const SynthSpec& spec, Lexicon& lex, std::mt19937_64& rng) {
  const std::size_t len = uniform(rng, spec.min_sentence_len, spec.max_sentence_len);
  Sentence s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(lex.foreign[lex.background[lex.zipf(rng)]]);
  return s;
}

Sentence translate(const Lexicon& lex, const Sentence& foreign, double error_rate, std::mt19937_64& rng) {
  Sentence out;
  for (const auto& f : foreign) {
    const std::size_t i = lex.foreign_index.at(f);
    const bool wrong = error_rate > 0.0 && chance(rng, error_rate);
    if (wrong) {
      out.push_back(lex.english[uniform(rng, 0, lex.english.size() - 1)]);
    } else if (lex.translation[i] >= 0) {
      out.push_back(lex.english[static_cast<std::size_t>(lex.translation[i])]);
    }
  }
  return out;
}

ConfusionNetwork to_confusion_network(const SynthSpec& spec, const Lexicon& lex, const Sentence& s,
                                      std::mt19937_64& rng) {
  ConfusionNetwork cn;
  const bool alternatives = spec.noise > 0.0 && spec.confusion_depth > 1;
  for (const auto& t : s) {
    Slot slot{{t, 1.0 - spec.noise}};
    if (alternatives) {
      const double share = spec.noise / static_cast<double>(spec.confusion_depth - 1);
      while (slot.size() < spec.confusion_depth) {
        const Token& alt = lex.foreign[lex.background[uniform(rng, 0, lex.background.size() - 1)]];
        if (std::none_of(slot.begin(), slot.end(), [&](const Arc& a) { return a.token == alt; }))
          slot.push_back({alt, share});
      }
    }
    cn.slots.push_back(std::move(slot));
  }
  return cn;
}

TranslationTable perturbed_table(const SynthSpec& spec, const Lexicon& lex, std::size_t which) {
  auto rng = stream(spec.seed, Stream::table, static_cast<unsigned>(which));
  TranslationTable table("table" + std::to_string(which + 1));
  // With probability `noise` a row is corrupted: half of its mass moves to a
  // wrong English word.
  for (std::size_t f = 0; f < lex.foreign.size(); ++f) {
    if (lex.translation[f] < 0) continue;
    const auto truth = static_cast<std::size_t>(lex.translation[f]);
    if (spec.noise > 0.0 && chance(rng, spec.noise)) {
      std::size_t e = truth;
      while (e == truth) e = uniform(rng, 0, lex.english.size() - 1);
      table.add(lex.foreign[f], lex.english[truth], 0.5);
      table.add(lex.foreign[f], lex.english[e], 0.5);
    } else {
      table.add(lex.foreign[f], lex.english[truth], 1.0);
    }
  }
  table.validate();
  return table;
}

}  // namespace

void SynthSpec::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("synth: " + what); };
  for (double rate : {noise, multiword_rate, speech_fraction, relevance_rate})
    if (!(rate >= 0.0 && rate <= 1.0)) fail("rates must lie in [0, 1]");
  if (noise >= 1.0) fail("noise must be < 1 so that true translations keep positive probability");
  if (foreign_vocab < 1 || english_vocab < 1 || docs < 2 || queries < 1 || bitext_pairs < 1 || heldout_pairs < 1 ||
      tables < 1)
    fail("vocabulary sizes, queries, bitext pairs, held-out pairs and tables must be >= 1; docs must be >= 2");
  if (min_sentences < 1 || min_sentences > max_sentences) fail("sentence count range is empty");
  if (min_sentence_len < 1 || min_sentence_len > max_sentence_len) fail("sentence length range is empty");
  if (max_phrases < 1 || max_phrase_len < 1) fail("phrase bounds must be >= 1");
  if (max_phrase_len > max_sentence_len) fail("phrase length exceeds the maximum sentence length");
  if (confusion_depth < 1) fail("confusion depth must be >= 1");
  const std::size_t paired = std::min(foreign_vocab, english_vocab);
  const std::size_t topic = queries * max_phrases * max_phrase_len;
  if (2 * topic > paired) fail("vocabulary too small for the requested queries (need twice the query words)");
  if (foreign_vocab - topic < confusion_depth) fail("too few background words for the confusion depth");
}

SynthDataset generate(const SynthSpec& spec) {
  spec.validate();
  Lexicon lex = build_lexicon(spec);
  SynthDataset data;

  // Background documents.
  auto text = stream(spec.seed, Stream::text);
  std::vector<std::vector<Sentence>> bodies(spec.docs);
  for (auto& body : bodies) {
    const std::size_t n = uniform(text, spec.min_sentences, spec.max_sentences);
    for (std::size_t i = 0; i < n; ++i) body.push_back(background_sentence(spec, lex, text));
  }

  // Queries take disjoint words from the reserved topic pool.
  std::size_t next_topic = 0;
  std::vector<std::vector<std::vector<std::size_t>>> query_foreign;
  for (std::size_t q = 0; q < spec.queries; ++q) {
    Query query;
    char id[32];
    std::snprintf(id, sizeof(id), "Q%03zu", q + 1);
    query.id = id;
    query.kind = QueryKind::lexical;
    std::vector<std::vector<std::size_t>> phrases_foreign;
    const std::size_t phrases = uniform(text, 1, spec.max_phrases);
    for (std::size_t p = 0; p < phrases; ++p) {
      std::size_t len = 1;
      if (spec.max_phrase_len > 1 && chance(text, spec.multiword_rate)) len = uniform(text, 2, spec.max_phrase_len);
      QueryPhrase phrase;
      std::vector<std::size_t> foreign;
      for (std::size_t w = 0; w < len; ++w) {
        const std::size_t f = lex.topic[next_topic++];
        foreign.push_back(f);
        phrase.words.push_back(lex.english[static_cast<std::size_t>(lex.translation[f])]);
      }
      query.phrases.push_back(std::move(phrase));
      phrases_foreign.push_back(std::move(foreign));
    }
    data.queries.push_back(std::move(query));
    query_foreign.push_back(std::move(phrases_foreign));
  }

  // Plant every phrase of a query inside one sentence of each chosen document.
  std::vector<std::string> doc_ids;
  for (std::size_t d = 0; d < spec.docs; ++d) {
    char id[32];
    std::snprintf(id, sizeof(id), "D%05zu", d + 1);
    doc_ids.emplace_back(id);
  }
  for (std::size_t q = 0; q < spec.queries; ++q) {
    std::vector<std::size_t> planted;
    for (std::size_t d = 0; d < spec.docs; ++d)
      if (chance(text, spec.relevance_rate)) planted.push_back(d);
    if (planted.empty()) planted.push_back(uniform(text, 0, spec.docs - 1));
    if (planted.size() == spec.docs) planted.pop_back();
    auto& gold = data.judgments[data.queries[q].id];
    for (std::size_t d : planted) {
      gold.insert(doc_ids[d]);
      for (const auto& phrase : query_foreign[q]) {
        Sentence& s = bodies[d][uniform(text, 0, bodies[d].size() - 1)];
        for (std::size_t f : phrase) {
          const std::size_t at = uniform(text, 0, s.size());
          s.insert(s.begin() + static_cast<std::ptrdiff_t>(at), lex.foreign[f]);
        }
      }
    }
  }

  // Speech conversion and MT hypotheses draw from their own streams.
  auto speech = stream(spec.seed, Stream::speech);
  auto mt = stream(spec.seed, Stream::mt);
  const std::vector<double> error_rates{spec.noise * 0.5, spec.noise};
  for (std::size_t d = 0; d < spec.docs; ++d) {
    Document doc;
    doc.id = doc_ids[d];
    const bool is_speech = chance(speech, spec.speech_fraction);
    for (std::size_t i = 0; i < bodies[d].size(); ++i)
      for (std::size_t k = 0; k < error_rates.size(); ++k)
        data.hypotheses.add("mt" + std::to_string(k + 1), doc.id, i, translate(lex, bodies[d][i], error_rates[k], mt));
    if (is_speech) {
      doc.kind = DocumentKind::speech;
      for (const auto& s : bodies[d]) doc.utterances.push_back(to_confusion_network(spec, lex, s, speech));
    } else {
      doc.kind = DocumentKind::text;
      doc.sentences = std::move(bodies[d]);
    }
    data.corpus.add(std::move(doc));
  }

  // Bitext: background text with topic words mixed in so every query word is
  // seen in training, translated word by word.
  auto bi = stream(spec.seed, Stream::bitext);
  auto make_pairs = [&](std::size_t count) {
    Bitext out;
    while (out.size() < count) {
      Sentence f = background_sentence(spec, lex, bi);
      const std::size_t extra = uniform(bi, 1, 2);
      for (std::size_t i = 0; i < extra; ++i) {
        const std::size_t at = uniform(bi, 0, f.size());
        f.insert(f.begin() + static_cast<std::ptrdiff_t>(at),
                 lex.foreign[lex.topic[uniform(bi, 0, lex.topic.size() - 1)]]);
      }
      Sentence e = translate(lex, f, 0.0, bi);
      if (e.empty()) continue;
      out.push_back({std::move(f), std::move(e)});
    }
    return out;
  };
  data.bitext = make_pairs(spec.bitext_pairs);
  data.heldout = make_pairs(spec.heldout_pairs);
  for (std::size_t i = 0; i < data.heldout.size(); ++i)
    for (std::size_t k = 0; k < error_rates.size(); ++k)
      data.hypotheses.add("mt" + std::to_string(k + 1), kBitextDocId, i,
                          translate(lex, data.heldout[i].foreign, error_rates[k], mt));

  for (std::size_t t = 0; t < spec.tables; ++t) data.tables.push_back(perturbed_table(spec, lex, t));
  return data;
}

void write_dataset(const std::string& dir, const SynthDataset& data) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir + ": cannot create directory: " + ec.message());
  const fs::path root(dir);
  write_corpus((root / "corpus.jsonl").string(), data.corpus);
  write_bitext((root / "bitext.tsv").string(), data.bitext);
  write_bitext((root / "heldout.tsv").string(), data.heldout);
  for (const auto& table : data.tables)
    write_translation_table((root / (table.source_tag() + ".tsv")).string(), table);
  write_mt_hypotheses((root / "mt.tsv").string(), data.hypotheses);
  write_queries((root / "queries.tsv").string(), data.queries);
  write_judgments((root / "judgments.tsv").string(), data.judgments);
}

}  // namespace clir
