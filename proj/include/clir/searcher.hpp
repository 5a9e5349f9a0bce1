#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "clir/corpus.hpp"
#include "clir/evidence.hpp"
#include "clir/vocabulary.hpp"

namespace clir {

/// Shared-embedding scorer. Foreign tokens are embedded, optionally passed
/// through one residual self-attention layer, and an English word scores
///   sigmoid(max_j <e(word), h_j> + bias(word)).
class SearcherModel {
 public:
  using Matrix = Eigen::MatrixXd;
  using Vector = Eigen::VectorXd;

  static constexpr const char* kUnknown = "<unk>";

  SearcherModel() = default;
  /// Zero-initialized model. `foreign` must not contain kUnknown; index 0 is
  /// reserved for it.
  SearcherModel(std::vector<Token> foreign, Vocabulary english, int dim, int depth);

  int dim() const { return static_cast<int>(english_emb.cols()); }
  int depth() const { return depth_; }
  const Vocabulary& english() const { return english_; }
  const std::vector<Token>& foreign_tokens() const { return foreign_; }

  /// 0 (the UNK row) for tokens outside the foreign vocabulary.
  std::size_t foreign_index(const Token& t) const;
  std::vector<std::size_t> encode(const Sentence& s) const;

  /// Contextualized embeddings, one row per token.
  Matrix contextualize(std::span<const std::size_t> ids) const;

  /// max_j <e(word), h_j> + bias(word); `argmax` receives the maximizing row.
  double logit(const Matrix& contextual, std::size_t word, Eigen::Index* argmax = nullptr) const;

  /// Flat views over every parameter block, in a fixed order.
  std::vector<std::span<double>> parameters();

  std::uint64_t foreign_hash() const;

  Matrix foreign_emb;  // (|foreign| + 1) x d, row 0 = UNK
  Matrix english_emb;  // K x d
  Vector bias;         // K
  Matrix query_proj;   // d x d, used when depth == 1
  Matrix key_proj;
  Matrix value_proj;

 private:
  std::vector<Token> foreign_;
  std::unordered_map<Token, std::size_t> foreign_lookup_;
  Vocabulary english_;
  int depth_ = 0;
};

/// Throws DataError when `word` is not in the model's English vocabulary.
double searcher_score(const SearcherModel& model, const Sentence& s, const Token& word);

/// One sentence with its scored targets; label 1 = relevant.
struct SearcherExample {
  std::vector<std::size_t> foreign;
  std::vector<std::size_t> words;
  std::vector<double> labels;
};

/// Same block layout as SearcherModel::parameters().
struct SearcherGradient {
  explicit SearcherGradient(const SearcherModel& like);

  void set_zero();
  std::vector<std::span<double>> parameters();

  SearcherModel::Matrix foreign_emb;
  SearcherModel::Matrix english_emb;
  SearcherModel::Vector bias;
  SearcherModel::Matrix query_proj;
  SearcherModel::Matrix key_proj;
  SearcherModel::Matrix value_proj;
};

/// Negated log-likelihood summed over all targets of all examples; adds the
/// gradient into `grad` when given.
double searcher_loss(const SearcherModel& model, std::span<const SearcherExample> batch,
                     SearcherGradient* grad = nullptr);

enum class SearcherOptimizer { sgd, adagrad };

struct SearcherConfig {
  SearcherOptimizer optimizer = SearcherOptimizer::adagrad;
  int dim = 32;
  int depth = 0;
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double learning_rate = 0.3;
  std::size_t negatives_per_positive = 50;
  /// Vocabularies up to this size use every non-relevant word as a negative.
  std::size_t full_vocab_max = 2000;
  std::size_t max_foreign_vocab = 200000;
  /// Rarer foreign tokens share the UNK embedding.
  std::size_t min_foreign_count = 2;
  double init_scale = 0.1;
  unsigned long long seed = 1;
};

struct SearcherTraining {
  SearcherModel model;
  std::vector<double> epoch_loss;  // mean loss per bitext pair
};

/// Mini-batch stochastic gradient training on the bitext (plain steps or
/// AdaGrad-scaled steps). Deterministic for a given seed. Throws DataError if
/// the loss stops being finite.
SearcherTraining train_searcher(const Bitext& bitext, const Vocabulary& vocab,
                                const SearcherConfig& cfg);

/// Text tensor dump with a manifest header; see README for the layout.
void save_searcher(const std::string& path, const SearcherModel& model);
SearcherModel load_searcher(const std::string& path);

/// Speech utterances are scored on their one-best token sequence. Words
/// outside the English vocabulary get no entry.
class SearcherGenerator final : public EvidenceGenerator {
 public:
  explicit SearcherGenerator(const SearcherModel& model, std::string tag = "searcher");

  std::string tag() const override { return tag_; }
  std::vector<std::pair<Token, double>> evaluate(const Document& doc, std::size_t unit,
                                                 std::span<const Token> words) const override;

 private:
  const SearcherModel& model_;
  std::string tag_;
};

}  // namespace clir
