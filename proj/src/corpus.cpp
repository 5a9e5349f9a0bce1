#include "clir/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "clir/error.hpp"
#include "clir/numeric.hpp"

namespace clir {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  return out;
}

// Reads lines, strips a trailing '\r', and hands non-blank lines to `fn`
// together with their 1-based line number.
template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    fn(line, number);
  }
}

Sentence normalize_sentence(const std::string& raw, const std::string& path, std::size_t line) {
  Sentence s = normalize(raw);
  if (s.empty()) throw DataError(located(path, line, "sentence normalizes to no tokens: '" + raw + "'"));
  return s;
}

}  // namespace

std::vector<Token> normalize(std::string_view raw) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && is_space(static_cast<unsigned char>(raw[i]))) ++i;
    std::size_t j = i;
    while (j < raw.size() && !is_space(static_cast<unsigned char>(raw[j]))) ++j;
    std::size_t b = i;
    std::size_t e = j;
    while (b < e && is_punct(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && is_punct(static_cast<unsigned char>(raw[e - 1]))) --e;
    if (b < e) {
      Token t(raw.substr(b, e - b));
      for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      out.push_back(std::move(t));
    }
    i = j;
  }
  return out;
}

std::string join(const Sentence& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ' ';
    out += s[i];
  }
  return out;
}

Sentence ConfusionNetwork::one_best() const {
  Sentence best;
  best.reserve(slots.size());
  for (const auto& slot : slots) {
    const auto it = std::max_element(slot.begin(), slot.end(), [](const Arc& a, const Arc& b) {
      return a.prob < b.prob || (a.prob == b.prob && a.token > b.token);
    });
    if (it != slot.end()) best.push_back(it->token);
  }
  return best;
}

std::string_view to_string(DocumentKind kind) {
  return kind == DocumentKind::text ? "text" : "speech";
}

std::string_view to_string(QueryKind kind) {
  switch (kind) {
    case QueryKind::lexical: return "lexical";
    case QueryKind::conceptual: return "conceptual";
    case QueryKind::example_of: return "example_of";
  }
  return "unknown";
}

void validate(const Document& doc) {
  auto fail = [&](const std::string& what) { throw DataError("document '" + doc.id + "': " + what); };
  if (doc.id.empty()) throw DataError("document with empty id");
  auto check_token = [&](const Token& t) {
    if (t.empty()) fail("empty token");
    if (std::any_of(t.begin(), t.end(), [](char c) { return is_space(static_cast<unsigned char>(c)); }))
      fail("token contains whitespace: '" + t + "'");
  };
  if (doc.kind == DocumentKind::text) {
    if (!doc.utterances.empty()) fail("text document carries utterances");
    if (doc.sentences.empty()) fail("empty body");
    for (const auto& s : doc.sentences) {
      if (s.empty()) fail("empty sentence");
      for (const auto& t : s) check_token(t);
    }
    return;
  }
  if (!doc.sentences.empty()) fail("speech document carries sentences");
  if (doc.utterances.empty()) fail("empty body");
  for (std::size_t u = 0; u < doc.utterances.size(); ++u) {
    const auto& cn = doc.utterances[u];
    if (cn.slots.empty()) fail("utterance " + std::to_string(u) + " has no slots");
    for (std::size_t s = 0; s < cn.slots.size(); ++s) {
      const auto& slot = cn.slots[s];
      const std::string where = "utterance " + std::to_string(u) + " slot " + std::to_string(s);
      if (slot.empty()) fail(where + " is empty");
      double sum = 0.0;
      for (const auto& arc : slot) {
        check_token(arc.token);
        if (!(arc.prob > 0.0 && arc.prob <= 1.0))
          fail(where + " arc probability " + format_double(arc.prob) + " outside (0,1]");
        sum += arc.prob;
      }
      if (sum > 1.0 + kSlotSumTolerance)
        fail(where + " probabilities sum to " + format_double(sum) + " > 1");
    }
  }
}

Corpus::Corpus(std::vector<Document> docs) {
  for (auto& d : docs) add(std::move(d));
}

void Corpus::add(Document doc) {
  validate(doc);
  if (index_.count(doc.id)) throw DataError("duplicate document id '" + doc.id + "'");
  index_.emplace(doc.id, docs_.size());
  docs_.push_back(std::move(doc));
}

const Document* Corpus::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &docs_[it->second];
}

const Document& Corpus::at(const std::string& id) const {
  const Document* d = find(id);
  if (!d) throw DataError("unknown document id '" + id + "'");
  return *d;
}

Query parse_query(std::string_view line) {
  const std::string shown(line);
  const auto tab = line.find('\t');
  if (tab == std::string_view::npos) throw DataError("query line has no tab: '" + shown + "'");
  Query q;
  q.id = std::string(trim(line.substr(0, tab)));
  if (q.id.empty()) throw DataError("query line has an empty id: '" + shown + "'");
  std::string_view body = trim(line.substr(tab + 1));
  if (body.empty()) throw DataError("query line has an empty query string: '" + shown + "'");

  constexpr std::string_view kExampleOf = "EXAMPLE_OF(";
  if (body.starts_with(kExampleOf) && body.ends_with(")")) {
    q.kind = QueryKind::example_of;
    body = trim(body.substr(kExampleOf.size(), body.size() - kExampleOf.size() - 1));
  }

  std::size_t start = 0;
  while (start <= body.size()) {
    auto comma = body.find(',', start);
    if (comma == std::string_view::npos) comma = body.size();
    std::string_view piece = trim(body.substr(start, comma - start));
    if (!piece.empty() && piece.back() == '+') {
      piece.remove_suffix(1);
      if (q.kind == QueryKind::lexical) q.kind = QueryKind::conceptual;
    }
    QueryPhrase phrase{normalize(piece)};
    if (phrase.words.empty()) throw DataError("query line has an empty phrase: '" + shown + "'");
    q.phrases.push_back(std::move(phrase));
    start = comma + 1;
  }
  return q;
}

std::string format_query(const Query& q) {
  std::string body;
  for (std::size_t i = 0; i < q.phrases.size(); ++i) {
    if (i) body += ", ";
    body += join(q.phrases[i].words);
    if (q.kind == QueryKind::conceptual) body += '+';
  }
  if (q.kind == QueryKind::example_of) body = "EXAMPLE_OF(" + body + ")";
  return body;
}

void TranslationTable::add(const Token& foreign, const Token& english, double prob) {
  rows_[foreign].push_back({english, prob});
}

void TranslationTable::validate() const {
  for (const auto& [foreign, row] : rows_) {
    double sum = 0.0;
    for (const auto& e : row) {
      if (!(e.prob > 0.0 && e.prob <= 1.0))
        throw DataError("translation table '" + tag_ + "': p(" + e.english + "|" + foreign + ") = " +
                        format_double(e.prob) + " outside (0,1]");
      sum += e.prob;
    }
    if (sum > 1.0 + kTableSumTolerance)
      throw DataError("translation table '" + tag_ + "': row '" + foreign + "' sums to " +
                      format_double(sum) + " > 1");
  }
}

const std::vector<TranslationEntry>* TranslationTable::find(const Token& foreign) const {
  const auto it = rows_.find(foreign);
  return it == rows_.end() ? nullptr : &it->second;
}

std::size_t TranslationTable::size() const {
  std::size_t n = 0;
  for (const auto& [_, row] : rows_) n += row.size();
  return n;
}

void validate_judgments(const Judgments& judgments, const Corpus& corpus) {
  for (const auto& [query, docs] : judgments)
    for (const auto& d : docs)
      if (!corpus.contains(d))
        throw DataError("judgments for query '" + query + "' reference unknown document '" + d + "'");
}

Corpus load_corpus(const std::string& path) {
  Corpus corpus;
  for_each_line(path, [&](const std::string& line, std::size_t number) {
    auto fail = [&](const std::string& what) { throw DataError(located(path, number, what)); };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("invalid JSON: ") + e.what());
    }
    try {
      Document doc;
      doc.id = j.at("id").get<std::string>();
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "text") {
        doc.kind = DocumentKind::text;
        if (j.contains("utterances")) fail("text document has 'utterances'");
        for (const auto& s : j.at("sentences")) {
          const auto raw = s.get<std::string>();
          doc.sentences.push_back(normalize_sentence(raw, path, number));
        }
      } else if (kind == "speech") {
        doc.kind = DocumentKind::speech;
        if (j.contains("sentences")) fail("speech document has 'sentences'");
        for (const auto& utt : j.at("utterances")) {
          ConfusionNetwork cn;
          for (const auto& slot_json : utt) {
            Slot slot;
            for (const auto& arc : slot_json) {
              if (!arc.is_array() || arc.size() != 2) fail("arc must be [token, prob]");
              const auto raw = arc[0].get<std::string>();
              auto toks = normalize(raw);
              if (toks.size() != 1) fail("arc token '" + raw + "' does not normalize to one token");
              slot.push_back({std::move(toks.front()), arc[1].get<double>()});
            }
            cn.slots.push_back(std::move(slot));
          }
          doc.utterances.push_back(std::move(cn));
        }
      } else {
        fail("unknown document kind '" + kind + "'");
      }
      corpus.add(std::move(doc));
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("bad document record: ") + e.what());
    } catch (const DataError& e) {
      const std::string what = e.what();
      if (what.rfind(path, 0) == 0) throw;
      fail(what);
    }
  });
  return corpus;
}

TranslationTable load_translation_table(const std::string& path) {
  TranslationTable table(std::filesystem::path(path).stem().string());
  for_each_line(path, [&](const std::string& line, std::size_t number) {
    const auto f = split_tabs(line);
    if (f.size() != 3) throw DataError(located(path, number, "expected foreign<TAB>english<TAB>prob"));
    const auto foreign = normalize(f[0]);
    const auto english = normalize(f[1]);
    if (foreign.size() != 1 || english.size() != 1)
      throw DataError(located(path, number, "table entries must be single tokens"));
    double prob = 0.0;
    try {
      prob = parse_double(std::string(trim(f[2])));
    } catch (const std::invalid_argument& e) {
      throw DataError(located(path, number, e.what()));
    }
    if (!(prob > 0.0 && prob <= 1.0))
      throw DataError(located(path, number, "probability " + f[2] + " outside (0,1]"));
    table.add(foreign.front(), english.front(), prob);
  });
  try {
    table.validate();
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
  return table;
}

Bitext load_bitext(const std::string& path) {
  Bitext bitext;
  for_each_line(path, [&](const std::string& line, std::size_t number) {
    const auto f = split_tabs(line);
    if (f.size() != 2) throw DataError(located(path, number, "expected foreign<TAB>english"));
    bitext.push_back({normalize_sentence(f[0], path, number), normalize_sentence(f[1], path, number)});
  });
  if (bitext.empty()) throw DataError(path + ": bitext is empty");
  return bitext;
}

std::vector<Query> load_queries(const std::string& path) {
  std::vector<Query> queries;
  for_each_line(path, [&](const std::string& line, std::size_t number) {
    try {
      queries.push_back(parse_query(line));
    } catch (const DataError& e) {
      throw DataError(located(path, number, e.what()));
    }
  });
  return queries;
}

Judgments load_judgments(const std::string& path) {
  Judgments judgments;
  for_each_line(path, [&](const std::string& line, std::size_t number) {
    const auto f = split_tabs(line);
    if (f.size() > 2) throw DataError(located(path, number, "expected query<TAB>doc"));
    const std::string query(trim(f[0]));
    if (query.empty()) throw DataError(located(path, number, "empty query id"));
    auto& docs = judgments[query];
    if (f.size() == 2) {
      const std::string doc(trim(f[1]));
      if (!doc.empty()) docs.insert(doc);
    }
  });
  return judgments;
}

void write_corpus(const std::string& path, const Corpus& corpus) {
  auto out = open_output(path);
  for (const auto& doc : corpus) {
    nlohmann::ordered_json j;
    j["id"] = doc.id;
    j["kind"] = std::string(to_string(doc.kind));
    if (doc.kind == DocumentKind::text) {
      auto& sentences = j["sentences"] = nlohmann::ordered_json::array();
      for (const auto& s : doc.sentences) sentences.push_back(join(s));
    } else {
      auto& utterances = j["utterances"] = nlohmann::ordered_json::array();
      for (const auto& cn : doc.utterances) {
        auto slots = nlohmann::ordered_json::array();
        for (const auto& slot : cn.slots) {
          auto arcs = nlohmann::ordered_json::array();
          for (const auto& arc : slot) arcs.push_back({arc.token, arc.prob});
          slots.push_back(std::move(arcs));
        }
        utterances.push_back(std::move(slots));
      }
    }
    out << j.dump() << '\n';
  }
}

void write_translation_table(const std::string& path, const TranslationTable& table) {
  auto out = open_output(path);
  for (const auto& [foreign, row] : table.entries())
    for (const auto& e : row) out << foreign << '\t' << e.english << '\t' << format_double(e.prob) << '\n';
}

void write_bitext(const std::string& path, const Bitext& bitext) {
  auto out = open_output(path);
  for (const auto& p : bitext) out << join(p.foreign) << '\t' << join(p.english) << '\n';
}

void write_queries(const std::string& path, const std::vector<Query>& queries) {
  auto out = open_output(path);
  for (const auto& q : queries) out << q.id << '\t' << format_query(q) << '\n';
}

void write_judgments(const std::string& path, const Judgments& judgments) {
  auto out = open_output(path);
  for (const auto& [query, docs] : judgments) {
    if (docs.empty()) out << query << "\t\n";
    for (const auto& d : docs) out << query << '\t' << d << '\n';
  }
}

}  // namespace clir
