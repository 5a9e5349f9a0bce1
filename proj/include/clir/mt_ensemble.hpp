#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "clir/corpus.hpp"
#include "clir/evidence.hpp"
#include "clir/vocabulary.hpp"

namespace clir {

/// English translations of foreign sentences, per MT system.
class MtHypothesisSet {
 public:
  using Key = std::pair<std::string, std::size_t>;  // (doc id, sentence index)

  void add(const std::string& system, const std::string& doc, std::size_t sentence, Sentence translation);
  const Sentence* find(const std::string& system, const std::string& doc, std::size_t sentence) const;

  std::vector<std::string> system_ids() const;
  std::size_t num_systems() const { return systems_.size(); }
  const std::map<std::string, std::map<Key, Sentence>>& systems() const { return systems_; }

  friend bool operator==(const MtHypothesisSet&, const MtHypothesisSet&) = default;

 private:
  std::map<std::string, std::map<Key, Sentence>> systems_;
};

/// TSV `system<TAB>doc<TAB>sentence-index<TAB>translation`.
MtHypothesisSet load_mt_hypotheses(const std::string& path);
void write_mt_hypotheses(const std::string& path, const MtHypothesisSet& hyps);

/// Every referenced (doc, sentence) must exist in the corpus. Bitext
/// entries (kBitextDocId) are not checked.
void validate_references(const MtHypothesisSet& hyps, const Corpus& corpus);

/// Logistic regression over one binary "word occurs in system k's output" feature per system.
struct MtEnsembleModel {
  std::vector<std::string> systems;
  Eigen::VectorXd weights;
  double bias = 0.0;
};

void save_mt_ensemble(const std::string& path, const MtEnsembleModel& model);
MtEnsembleModel load_mt_ensemble(const std::string& path);

enum class LogisticSolver { newton, gradient };

struct LogisticFitConfig {
  LogisticSolver solver = LogisticSolver::newton;
  double l2 = 1e-3;
  double learning_rate = 0.1;  // first trial step of the gradient solver
  std::size_t max_iterations = 10000;
  double tolerance = 1e-7;  // relative loss change
  std::size_t negatives_per_positive = 50;
  unsigned long long seed = 1;
};

/// Regularized mean negative log-likelihood over binary feature rows.
/// Identical rows are expected to be merged with their positive and negative
/// counts. Parameters are laid out as [w_1 .. w_S, bias]; the bias is not
/// regularized.
class LogisticObjective {
 public:
  LogisticObjective(Eigen::MatrixXd features, Eigen::VectorXd positives, Eigen::VectorXd negatives,
                    double l2);

  /// Builds the merged problem from raw 0/1 rows and 0/1 labels.
  static LogisticObjective from_instances(const Eigen::MatrixXd& rows, const Eigen::VectorXd& labels,
                                          double l2);

  double loss(const Eigen::VectorXd& params) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& params) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& params) const;

  Eigen::Index num_features() const { return features_.cols(); }
  double total_positives() const { return positives_.sum(); }
  double total_negatives() const { return negatives_.sum(); }

 private:
  Eigen::MatrixXd features_;
  Eigen::VectorXd positives_;
  Eigen::VectorXd negatives_;
  double l2_;
  double count_;
};

struct LogisticFit {
  Eigen::VectorXd params;
  std::vector<double> losses;  // one per accepted step, starting with the initial loss
  std::size_t iterations = 0;
  bool converged = false;
};

/// Damped Newton or gradient descent from `init`; both halve the step until
/// the Armijo condition holds.
LogisticFit minimize_logistic(const LogisticObjective& objective, Eigen::VectorXd init,
                              const LogisticFitConfig& cfg);

/// Training rows for the ensemble: one per labeled instance of the bitext;
/// hypotheses are looked up under kBitextDocId.
LogisticObjective mt_training_objective(const MtHypothesisSet& hyps, const Bitext& bitext,
                                        const Vocabulary& vocab, const LogisticFitConfig& cfg);

struct MtEnsembleFit {
  MtEnsembleModel model;
  double loss = 0.0;
  std::size_t iterations = 0;
};

/// Throws ConfigError with fewer than two systems, DataError on a degenerate
/// training set or missing hypotheses.
MtEnsembleFit fit_mt_ensemble(const MtHypothesisSet& hyps, const Bitext& bitext,
                              const Vocabulary& vocab, const LogisticFitConfig& cfg = {});

/// sigmoid(sum_k w_k x_k + b), x_k = [word occurs in system k's translation].
double mt_evidence(const MtEnsembleModel& model, const MtHypothesisSet& hyps, const std::string& doc,
                   std::size_t sentence, const Token& word);

class MtEnsembleGenerator final : public EvidenceGenerator {
 public:
  MtEnsembleGenerator(const MtEnsembleModel& model, const MtHypothesisSet& hyps,
                      std::string tag = "mt");

  std::string tag() const override { return tag_; }
  std::vector<std::pair<Token, double>> evaluate(const Document& doc, std::size_t unit,
                                                 std::span<const Token> words) const override;

 private:
  const MtEnsembleModel& model_;
  const MtHypothesisSet& hyps_;
  std::string tag_;
};

}  // namespace clir
