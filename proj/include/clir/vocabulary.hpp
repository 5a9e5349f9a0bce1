#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "clir/corpus.hpp"

namespace clir {

/// Fixed English vocabulary with a dense index.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Throws DataError on duplicates.
  explicit Vocabulary(std::vector<Token> tokens);

  /// The `max_size` most frequent English tokens of the bitext; ties broken
  /// by ascending token.
  static Vocabulary from_bitext(const Bitext& bitext, std::size_t max_size);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  std::optional<std::size_t> index(const Token& t) const;
  bool contains(const Token& t) const { return lookup_.count(t) != 0; }
  const Token& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<Token>& tokens() const { return tokens_; }

  /// FNV-1a over the ordered token list; used to pin persisted models.
  std::uint64_t hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<Token> tokens_;
  std::unordered_map<Token, std::size_t> lookup_;
};

}  // namespace clir
