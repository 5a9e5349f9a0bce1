#include "clir/evidence_matrix.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "clir/error.hpp"

namespace clir {

EvidenceMatrix::EvidenceMatrix(std::string generator_tag, double eps)
    : tag_(std::move(generator_tag)), eps_(eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("evidence floor must lie in (0, 0.5)");
}

void EvidenceMatrix::set(const std::string& doc, std::size_t sentence, const Token& word, double p) {
  cells_[doc][sentence][word] = clamp_prob(p, eps_);
}

const EvidenceMatrix::Row* EvidenceMatrix::row(const std::string& doc, std::size_t sentence) const {
  const auto d = cells_.find(doc);
  if (d == cells_.end()) return nullptr;
  const auto s = d->second.find(sentence);
  return s == d->second.end() ? nullptr : &s->second;
}

double EvidenceMatrix::get(const std::string& doc, std::size_t sentence, const Token& word) const {
  const Row* r = row(doc, sentence);
  if (!r) return eps_;
  const auto it = r->find(word);
  return it == r->end() ? eps_ : it->second;
}

bool EvidenceMatrix::has(const std::string& doc, std::size_t sentence, const Token& word) const {
  const Row* r = row(doc, sentence);
  return r && r->count(word);
}

std::size_t EvidenceMatrix::entries() const {
  std::size_t n = 0;
  for (const auto& [_, sentences] : cells_)
    for (const auto& [__, r] : sentences) n += r.size();
  return n;
}

std::string format_evidence(const EvidenceMatrix& m) {
  std::ostringstream out;
  out << "#generator=" << m.tag() << '\n';
  for (const auto& [doc, sentences] : m.cells()) {
    for (const auto& [index, r] : sentences) {
      std::vector<std::pair<Token, double>> sorted(r.begin(), r.end());
      std::sort(sorted.begin(), sorted.end());
      for (const auto& [word, p] : sorted)
        out << doc << '\t' << index << '\t' << word << '\t' << format_double(p) << '\n';
    }
  }
  return out.str();
}

void write_evidence(const std::string& path, const EvidenceMatrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << format_evidence(m);
}

EvidenceMatrix load_evidence(const std::string& path, double eps) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open for reading");
  EvidenceMatrix m({}, eps);
  std::string line;
  std::size_t number = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#generator=", 0) == 0) {
      m.set_tag(line.substr(11));
      header = true;
      continue;
    }
    std::istringstream fields(line);
    std::string doc, index, word, prob;
    if (!std::getline(fields, doc, '\t') || !std::getline(fields, index, '\t') ||
        !std::getline(fields, word, '\t') || !std::getline(fields, prob))
      throw DataError(located(path, number, "expected doc<TAB>sentence<TAB>token<TAB>prob"));
    try {
      const double p = parse_double(prob);
      if (!(p >= 0.0 && p <= 1.0)) throw DataError(located(path, number, "probability outside [0,1]"));
      m.set(doc, parse_index(index), word, p);
    } catch (const std::invalid_argument& e) {
      throw DataError(located(path, number, e.what()));
    }
  }
  if (!header) throw DataError(path + ": missing #generator= header");
  return m;
}

}  // namespace clir
