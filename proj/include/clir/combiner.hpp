#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clir/corpus.hpp"
#include "clir/evidence_matrix.hpp"
#include "clir/vocabulary.hpp"

namespace clir {

/// Convex mixture weights keyed by generator tag.
class MixtureWeights {
 public:
  MixtureWeights() = default;
  /// Throws DataError unless weights are non-negative and sum to 1 within 1e-9.
  explicit MixtureWeights(std::map<std::string, double> weights);

  static MixtureWeights uniform(std::span<const std::string> tags);

  double at(const std::string& tag) const;
  std::size_t size() const { return weights_.size(); }
  const std::map<std::string, double>& weights() const { return weights_; }

  friend bool operator==(const MixtureWeights&, const MixtureWeights&) = default;

 private:
  std::map<std::string, double> weights_;
};

inline constexpr double kSimplexTolerance = 1e-9;

/// Cell-wise sum_k w_k p_k with absent cells read as each matrix's floor.
/// Summation runs in tag order, so the result does not depend on the order
/// matrices are passed in. Output is tagged "combined".
EvidenceMatrix combine(std::span<const EvidenceMatrix> matrices, const MixtureWeights& weights);

struct EmConfig {
  std::size_t max_iterations = 500;
  double tolerance = 1e-8;  // absolute log-likelihood improvement
};

struct EmResult {
  Eigen::VectorXd weights;
  std::vector<double> log_likelihood;  // initial value, then one per iteration
  std::size_t iterations = 0;
};

/// EM for the weights of a mixture of fixed experts. `likelihoods(i, k)` is
/// expert k's probability of instance i's observed label. Starts uniform.
EmResult fit_mixture_weights(const Eigen::MatrixXd& likelihoods, const EmConfig& cfg = {});

struct MixtureFitConfig {
  EmConfig em;
  std::size_t negatives_per_positive = 50;
  unsigned long long seed = 1;
};

struct MixtureFit {
  MixtureWeights weights;
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  std::size_t instances = 0;
};

/// Matrices are evidence over the bitext foreign sides (doc kBitextDocId).
/// Instances follow the positives / sampled negatives convention.
MixtureFit fit_mixture(std::span<const EvidenceMatrix> matrices, const Bitext& bitext,
                       const Vocabulary& vocab, const MixtureFitConfig& cfg = {});

/// TSV `tag<TAB>weight` with a `#loglik=<value>` trailer.
void write_mixture(const std::string& path, const MixtureWeights& weights, double log_likelihood);
MixtureWeights load_mixture(const std::string& path);

}  // namespace clir
