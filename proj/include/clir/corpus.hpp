#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace clir {

/// A normalized word: lowercased, edge punctuation stripped, never empty,
/// never containing whitespace. Produced by normalize().
using Token = std::string;
using Sentence = std::vector<Token>;

/// Lowercase, split on whitespace, strip leading/trailing punctuation from
/// each piece, drop pieces that end up empty.
std::vector<Token> normalize(std::string_view raw);

/// Joins tokens with single spaces.
std::string join(const Sentence& s);

struct Arc {
  Token token;
  double prob = 0.0;

  friend bool operator==(const Arc&, const Arc&) = default;
};

using Slot = std::vector<Arc>;

/// ASR "sausage": a sequence of slots of alternative tokens. The mass missing
/// from a slot (1 - sum of probs) belongs to the null arc.
struct ConfusionNetwork {
  std::vector<Slot> slots;

  /// Highest-probability token of every slot, in order.
  Sentence one_best() const;

  friend bool operator==(const ConfusionNetwork&, const ConfusionNetwork&) = default;
};

enum class DocumentKind { text, speech };

std::string_view to_string(DocumentKind kind);

struct Document {
  std::string id;
  DocumentKind kind = DocumentKind::text;
  std::vector<Sentence> sentences;           // kind == text
  std::vector<ConfusionNetwork> utterances;  // kind == speech

  /// Number of sentence-like units: sentences for text, utterances for speech.
  std::size_t size() const {
    return kind == DocumentKind::text ? sentences.size() : utterances.size();
  }

  friend bool operator==(const Document&, const Document&) = default;
};

/// Id-indexed document collection; iteration follows insertion order.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> docs);

  /// Throws DataError on duplicate id or an invalid document.
  void add(Document doc);

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const std::vector<Document>& documents() const { return docs_; }
  const Document* find(const std::string& id) const;
  const Document& at(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.count(id) != 0; }

  auto begin() const { return docs_.begin(); }
  auto end() const { return docs_.end(); }

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.docs_ == b.docs_; }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class QueryKind { lexical, conceptual, example_of };

std::string_view to_string(QueryKind kind);

struct QueryPhrase {
  std::vector<Token> words;

  friend bool operator==(const QueryPhrase&, const QueryPhrase&) = default;
};

struct Query {
  std::string id;
  QueryKind kind = QueryKind::lexical;
  std::vector<QueryPhrase> phrases;

  friend bool operator==(const Query&, const Query&) = default;
};

/// Parses `<id>\t<query-string>`. Phrases are comma-separated; a trailing
/// `+` marks a conceptual query, an `EXAMPLE_OF(...)` wrapper marks example_of.
Query parse_query(std::string_view line);

/// Inverse of parse_query for the query-string part.
std::string format_query(const Query& q);

struct TranslationEntry {
  Token english;
  double prob = 0.0;

  friend bool operator==(const TranslationEntry&, const TranslationEntry&) = default;
};

/// Forward lexical translation probabilities p(english | foreign).
class TranslationTable {
 public:
  TranslationTable() = default;
  explicit TranslationTable(std::string source_tag) : tag_(std::move(source_tag)) {}

  /// Adds one entry without validation; call validate() when done.
  void add(const Token& foreign, const Token& english, double prob);

  /// Throws DataError if any prob is outside (0,1] or a row sums above 1 + 1e-4.
  void validate() const;

  const std::vector<TranslationEntry>* find(const Token& foreign) const;

  const std::string& source_tag() const { return tag_; }
  void set_source_tag(std::string tag) { tag_ = std::move(tag); }
  const std::map<Token, std::vector<TranslationEntry>>& entries() const { return rows_; }
  std::size_t size() const;

  friend bool operator==(const TranslationTable&, const TranslationTable&) = default;

 private:
  std::string tag_;
  std::map<Token, std::vector<TranslationEntry>> rows_;
};

struct SentencePair {
  Sentence foreign;
  Sentence english;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

using Bitext = std::vector<SentencePair>;

/// query id -> relevant document ids (possibly empty).
using Judgments = std::map<std::string, std::set<std::string>>;

/// Throws DataError naming the first judged document missing from the corpus.
void validate_judgments(const Judgments& judgments, const Corpus& corpus);

inline constexpr double kTableSumTolerance = 1e-4;
inline constexpr double kSlotSumTolerance = 1e-6;

/// Throws DataError describing the first violated invariant.
void validate(const Document& doc);

// Loaders. Format violations raise DataError carrying file and line number.
Corpus load_corpus(const std::string& path);
TranslationTable load_translation_table(const std::string& path);
Bitext load_bitext(const std::string& path);
std::vector<Query> load_queries(const std::string& path);
Judgments load_judgments(const std::string& path);

void write_corpus(const std::string& path, const Corpus& corpus);
void write_translation_table(const std::string& path, const TranslationTable& table);
void write_bitext(const std::string& path, const Bitext& bitext);
void write_queries(const std::string& path, const std::vector<Query>& queries);
void write_judgments(const std::string& path, const Judgments& judgments);

}  // namespace clir
