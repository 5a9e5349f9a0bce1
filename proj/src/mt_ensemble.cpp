#include "clir/mt_ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "clir/error.hpp"
#include "clir/numeric.hpp"
#include "clir/training.hpp"

namespace clir {

namespace {

bool occurs(const Sentence& s, const Token& w) { return std::find(s.begin(), s.end(), w) != s.end(); }

std::string sentence_name(const std::string& doc, std::size_t sentence) {
  return "'" + doc + "' sentence " + std::to_string(sentence);
}

}  // namespace

void MtHypothesisSet::add(const std::string& system, const std::string& doc, std::size_t sentence,
                          Sentence translation) {
  systems_[system][{doc, sentence}] = std::move(translation);
}

const Sentence* MtHypothesisSet::find(const std::string& system, const std::string& doc,
                                      std::size_t sentence) const {
  const auto s = systems_.find(system);
  if (s == systems_.end()) return nullptr;
  const auto h = s->second.find({doc, sentence});
  return h == s->second.end() ? nullptr : &h->second;
}

std::vector<std::string> MtHypothesisSet::system_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : systems_) ids.push_back(id);
  return ids;
}

MtHypothesisSet load_mt_hypotheses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open for reading");
  MtHypothesisSet hyps;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string system, doc, index, text;
    if (!std::getline(fields, system, '\t') || !std::getline(fields, doc, '\t') ||
        !std::getline(fields, index, '\t'))
      throw DataError(located(path, number, "expected system<TAB>doc<TAB>sentence<TAB>translation"));
    std::getline(fields, text);
    if (system.empty() || doc.empty()) throw DataError(located(path, number, "empty system or document id"));
    std::size_t sentence = 0;
    try {
      sentence = parse_index(index);
    } catch (const std::invalid_argument& e) {
      throw DataError(located(path, number, e.what()));
    }
    // An empty translation is legal: the system produced no output words.
    hyps.add(system, doc, sentence, normalize(text));
  }
  return hyps;
}

void write_mt_hypotheses(const std::string& path, const MtHypothesisSet& hyps) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  for (const auto& [system, sentences] : hyps.systems())
    for (const auto& [key, text] : sentences)
      out << system << '\t' << key.first << '\t' << key.second << '\t' << join(text) << '\n';
}

void validate_references(const MtHypothesisSet& hyps, const Corpus& corpus) {
  for (const auto& [system, sentences] : hyps.systems())
    for (const auto& [key, _] : sentences) {
      if (key.first == kBitextDocId) continue;
      const Document* d = corpus.find(key.first);
      if (!d || key.second >= d->size())
        throw DataError("MT system '" + system + "' references missing " + sentence_name(key.first, key.second));
    }
}

void save_mt_ensemble(const std::string& path, const MtEnsembleModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << "#mt-ensemble\n";
  out << "bias\t" << format_double(model.bias) << '\n';
  for (std::size_t k = 0; k < model.systems.size(); ++k)
    out << "system\t" << model.systems[k] << '\t' << format_double(model.weights(static_cast<Eigen::Index>(k)))
        << '\n';
}

MtEnsembleModel load_mt_ensemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open for reading");
  MtEnsembleModel model;
  std::vector<double> weights;
  std::string line;
  std::size_t number = 0;
  bool has_bias = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string kind, a, b;
    std::getline(fields, kind, '\t');
    try {
      if (kind == "bias" && std::getline(fields, a)) {
        model.bias = parse_double(a);
        has_bias = true;
      } else if (kind == "system" && std::getline(fields, a, '\t') && std::getline(fields, b)) {
        model.systems.push_back(a);
        weights.push_back(parse_double(b));
      } else {
        throw DataError(located(path, number, "expected 'bias<TAB>v' or 'system<TAB>id<TAB>w'"));
      }
    } catch (const std::invalid_argument& e) {
      throw DataError(located(path, number, e.what()));
    }
  }
  if (!has_bias || model.systems.empty()) throw DataError(path + ": incomplete MT ensemble model");
  model.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  if (!model.weights.allFinite() || !std::isfinite(model.bias)) throw DataError(path + ": non-finite parameter");
  return model;
}

LogisticObjective::LogisticObjective(Eigen::MatrixXd features, Eigen::VectorXd positives,
                                     Eigen::VectorXd negatives, double l2)
    : features_(std::move(features)),
      positives_(std::move(positives)),
      negatives_(std::move(negatives)),
      l2_(l2),
      count_(positives_.sum() + negatives_.sum()) {
  if (features_.rows() != positives_.size() || features_.rows() != negatives_.size())
    throw std::invalid_argument("LogisticObjective: row counts disagree");
  if (count_ <= 0.0) throw DataError("logistic regression: no training instances");
}

LogisticObjective LogisticObjective::from_instances(const Eigen::MatrixXd& rows, const Eigen::VectorXd& labels,
                                                    double l2) {
  if (rows.rows() != labels.size())
    throw std::invalid_argument("LogisticObjective: label count mismatch");
  std::map<std::vector<double>, std::pair<double, double>> merged;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    std::vector<double> key(rows.cols());
    for (Eigen::Index k = 0; k < rows.cols(); ++k) key[k] = rows(i, k);
    auto& counts = merged[key];
    (labels(i) > 0.5 ? counts.first : counts.second) += 1.0;
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(merged.size()), rows.cols());
  Eigen::VectorXd pos(x.rows()), neg(x.rows());
  Eigen::Index r = 0;
  for (const auto& [key, counts] : merged) {
    for (Eigen::Index k = 0; k < rows.cols(); ++k) x(r, k) = key[k];
    pos(r) = counts.first;
    neg(r) = counts.second;
    ++r;
  }
  return LogisticObjective(std::move(x), std::move(pos), std::move(neg), l2);
}

double LogisticObjective::loss(const Eigen::VectorXd& params) const {
  const Eigen::Index s = features_.cols();
  const auto w = params.head(s);
  const double b = params(s);
  const Eigen::VectorXd z = (features_ * w).array() + b;
  double nll = 0.0;
  for (Eigen::Index r = 0; r < z.size(); ++r)
    nll -= positives_(r) * log_sigmoid(z(r)) + negatives_(r) * log_sigmoid(-z(r));
  return nll / count_ + 0.5 * l2_ * w.squaredNorm();
}

Eigen::VectorXd LogisticObjective::gradient(const Eigen::VectorXd& params) const {
  const Eigen::Index s = features_.cols();
  const auto w = params.head(s);
  const double b = params(s);
  const Eigen::VectorXd z = (features_ * w).array() + b;
  Eigen::VectorXd residual(z.size());
  for (Eigen::Index r = 0; r < z.size(); ++r) {
    const double p = sigmoid(z(r));
    residual(r) = (positives_(r) * (p - 1.0) + negatives_(r) * p) / count_;
  }
  Eigen::VectorXd g(s + 1);
  g.head(s) = features_.transpose() * residual + l2_ * w;
  g(s) = residual.sum();
  return g;
}

Eigen::MatrixXd LogisticObjective::hessian(const Eigen::VectorXd& params) const {
  const Eigen::Index s = features_.cols();
  Eigen::MatrixXd design(features_.rows(), s + 1);
  design << features_, Eigen::VectorXd::Ones(features_.rows());
  const Eigen::VectorXd z = (features_ * params.head(s)).array() + params(s);
  Eigen::VectorXd curvature(z.size());
  for (Eigen::Index r = 0; r < z.size(); ++r) {
    const double p = sigmoid(z(r));
    curvature(r) = (positives_(r) + negatives_(r)) * p * (1.0 - p) / count_;
  }
  Eigen::MatrixXd h = design.transpose() * curvature.asDiagonal() * design;
  h.diagonal().head(s).array() += l2_;
  return h;
}

LogisticFit minimize_logistic(const LogisticObjective& objective, Eigen::VectorXd init,
                              const LogisticFitConfig& cfg) {
  LogisticFit fit;
  fit.params = std::move(init);
  double current = objective.loss(fit.params);
  fit.losses.push_back(current);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const Eigen::VectorXd g = objective.gradient(fit.params);
    const double g2 = g.squaredNorm();
    if (g2 == 0.0) {
      fit.converged = true;
      break;
    }
    Eigen::VectorXd direction = -g;
    double step = cfg.learning_rate;
    if (cfg.solver == LogisticSolver::newton) {
      const Eigen::LDLT<Eigen::MatrixXd> ldlt(objective.hessian(fit.params));
      const Eigen::VectorXd newton = ldlt.solve(-g);
      if (ldlt.info() == Eigen::Success && newton.allFinite() && newton.dot(g) < 0.0) direction = newton;
      step = 1.0;
    }
    const double slope = direction.dot(g);
    Eigen::VectorXd candidate = fit.params + step * direction;
    double next = objective.loss(candidate);
    // Armijo condition; halve until it holds.
    while (next > current + 0.5 * step * slope && step > 1e-20) {
      step *= 0.5;
      candidate = fit.params + step * direction;
      next = objective.loss(candidate);
    }
    ++fit.iterations;
    if (next > current) {  // no descent possible at machine precision
      fit.converged = true;
      break;
    }
    const double change = std::abs(current - next) / std::max(std::abs(current), 1e-300);
    fit.params = std::move(candidate);
    current = next;
    fit.losses.push_back(current);
    if (change < cfg.tolerance) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

LogisticObjective mt_training_objective(const MtHypothesisSet& hyps, const Bitext& bitext,
                                        const Vocabulary& vocab, const LogisticFitConfig& cfg) {
  const auto systems = hyps.system_ids();
  if (systems.size() < 2) throw ConfigError("MT ensemble needs at least two systems");
  for (const auto& system : systems)
    for (std::size_t i = 0; i < bitext.size(); ++i)
      if (!hyps.find(system, kBitextDocId, i))
        throw DataError("MT system '" + system + "' has no hypothesis for bitext pair " + std::to_string(i));

  std::mt19937_64 rng(cfg.seed);
  const auto instances = sample_instances(bitext, vocab, cfg.negatives_per_positive, rng);
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(instances.size()), static_cast<Eigen::Index>(systems.size()));
  Eigen::VectorXd labels(rows.rows());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const Token& word = vocab.token(inst.word);
    for (std::size_t k = 0; k < systems.size(); ++k)
      rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          occurs(*hyps.find(systems[k], kBitextDocId, inst.pair), word) ? 1.0 : 0.0;
    labels(static_cast<Eigen::Index>(i)) = inst.relevant ? 1.0 : 0.0;
    positives += inst.relevant;
  }
  if (positives == 0 || positives == instances.size())
    throw DataError("MT ensemble training set is degenerate (" + std::to_string(positives) + " positives of " +
                    std::to_string(instances.size()) + " instances)");
  return LogisticObjective::from_instances(rows, labels, cfg.l2);
}

MtEnsembleFit fit_mt_ensemble(const MtHypothesisSet& hyps, const Bitext& bitext, const Vocabulary& vocab,
                              const LogisticFitConfig& cfg) {
  const auto objective = mt_training_objective(hyps, bitext, vocab, cfg);
  const auto fit = minimize_logistic(objective, Eigen::VectorXd::Zero(objective.num_features() + 1), cfg);
  MtEnsembleFit out;
  out.model.systems = hyps.system_ids();
  out.model.weights = fit.params.head(objective.num_features());
  out.model.bias = fit.params(objective.num_features());
  out.loss = fit.losses.back();
  out.iterations = fit.iterations;
  return out;
}

double mt_evidence(const MtEnsembleModel& model, const MtHypothesisSet& hyps, const std::string& doc,
                   std::size_t sentence, const Token& word) {
  double z = model.bias;
  for (std::size_t k = 0; k < model.systems.size(); ++k) {
    const Sentence* h = hyps.find(model.systems[k], doc, sentence);
    if (!h)
      throw DataError("MT system '" + model.systems[k] + "' has no hypothesis for " + sentence_name(doc, sentence));
    if (occurs(*h, word)) z += model.weights(static_cast<Eigen::Index>(k));
  }
  return sigmoid(z);
}

MtEnsembleGenerator::MtEnsembleGenerator(const MtEnsembleModel& model, const MtHypothesisSet& hyps,
                                         std::string tag)
    : model_(model), hyps_(hyps), tag_(std::move(tag)) {}

std::vector<std::pair<Token, double>> MtEnsembleGenerator::evaluate(const Document& doc, std::size_t unit,
                                                                    std::span<const Token> words) const {
  std::vector<std::pair<Token, double>> out;
  out.reserve(words.size());
  for (const auto& w : words) out.emplace_back(w, mt_evidence(model_, hyps_, doc.id, unit, w));
  return out;
}

}  // namespace clir
