#include "clir/vocabulary.hpp"

#include <algorithm>

#include "clir/error.hpp"

namespace clir {

Vocabulary::Vocabulary(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
  lookup_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (!lookup_.emplace(tokens_[i], i).second)
      throw DataError("vocabulary: duplicate token '" + tokens_[i] + "'");
}

Vocabulary Vocabulary::from_bitext(const Bitext& bitext, std::size_t max_size) {
  std::unordered_map<Token, std::size_t> counts;
  for (const auto& pair : bitext)
    for (const auto& t : pair.english) ++counts[t];
  std::vector<std::pair<Token, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<Token> tokens;
  tokens.reserve(ranked.size());
  for (auto& [t, _] : ranked) tokens.push_back(t);
  return Vocabulary(std::move(tokens));
}

std::optional<std::size_t> Vocabulary::index(const Token& t) const {
  const auto it = lookup_.find(t);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& t : tokens_) {
    for (unsigned char c : t) mix(c);
    mix('\n');
  }
  return h;
}

}  // namespace clir
