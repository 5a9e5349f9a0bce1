#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "clir/corpus.hpp"
#include "clir/numeric.hpp"

namespace clir {

/// Sparse p(rel | sentence, english word) keyed by (doc id, sentence index).
/// Stored values are clamped into [eps, 1 - eps]; absent cells read as eps.
class EvidenceMatrix {
 public:
  using Row = std::unordered_map<Token, double>;

  explicit EvidenceMatrix(std::string generator_tag = {}, double eps = kEpsilon);

  const std::string& tag() const { return tag_; }
  void set_tag(std::string tag) { tag_ = std::move(tag); }
  double epsilon() const { return eps_; }

  /// Stores clamp(p) at the cell, replacing any previous value.
  void set(const std::string& doc, std::size_t sentence, const Token& word, double p);
  double get(const std::string& doc, std::size_t sentence, const Token& word) const;
  bool has(const std::string& doc, std::size_t sentence, const Token& word) const;

  /// nullptr when the sentence has no stored entries.
  const Row* row(const std::string& doc, std::size_t sentence) const;

  std::size_t entries() const;
  const std::map<std::string, std::map<std::size_t, Row>>& cells() const { return cells_; }

  friend bool operator==(const EvidenceMatrix&, const EvidenceMatrix&) = default;

 private:
  std::string tag_;
  double eps_;
  std::map<std::string, std::map<std::size_t, Row>> cells_;
};

/// TSV `doc<TAB>sentence<TAB>token<TAB>prob` preceded by `#generator=<tag>`.
/// Rows are sorted by (doc, sentence, token) so output is byte-stable.
void write_evidence(const std::string& path, const EvidenceMatrix& m);
std::string format_evidence(const EvidenceMatrix& m);
EvidenceMatrix load_evidence(const std::string& path, double eps = kEpsilon);

}  // namespace clir
