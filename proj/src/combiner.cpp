#include "clir/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "clir/error.hpp"
#include "clir/evidence.hpp"
#include "clir/training.hpp"

namespace clir {

namespace {

// Matrices sorted by tag; throws on duplicate tags.
std::vector<const EvidenceMatrix*> by_tag(std::span<const EvidenceMatrix> matrices) {
  std::vector<const EvidenceMatrix*> sorted;
  for (const auto& m : matrices) sorted.push_back(&m);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->tag() < b->tag(); });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i]->tag() == sorted[i - 1]->tag())
      throw ConfigError("duplicate evidence generator tag '" + sorted[i]->tag() + "'");
  return sorted;
}

double log_likelihood(const Eigen::MatrixXd& q, const Eigen::VectorXd& w) {
  return (q * w).array().log().sum();
}

}  // namespace

MixtureWeights::MixtureWeights(std::map<std::string, double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw DataError("mixture weights: empty");
  double sum = 0.0;
  for (const auto& [tag, w] : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("mixture weight for '" + tag + "' is negative or not finite");
    sum += w;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance)
    throw DataError("mixture weights sum to " + format_double(sum) + ", not 1");
}

MixtureWeights MixtureWeights::uniform(std::span<const std::string> tags) {
  std::map<std::string, double> w;
  for (const auto& t : tags) w[t] = 1.0 / static_cast<double>(tags.size());
  if (w.size() != tags.size()) throw ConfigError("mixture weights: duplicate tag");
  return MixtureWeights(std::move(w));
}

double MixtureWeights::at(const std::string& tag) const {
  const auto it = weights_.find(tag);
  if (it == weights_.end()) throw ConfigError("no mixture weight for generator '" + tag + "'");
  return it->second;
}

EvidenceMatrix combine(std::span<const EvidenceMatrix> matrices, const MixtureWeights& weights) {
  if (matrices.empty()) throw ConfigError("combine: no evidence matrices");
  const auto sorted = by_tag(matrices);
  if (sorted.size() != weights.size())
    throw ConfigError("combine: " + std::to_string(weights.size()) + " weights for " + std::to_string(sorted.size()) +
                      " matrices");
  std::vector<double> lambda;
  for (const auto* m : sorted) lambda.push_back(weights.at(m->tag()));
  const double eps = sorted.front()->epsilon();
  for (const auto* m : sorted)
    if (m->epsilon() != eps) throw ConfigError("combine: matrices use different probability floors");

  // Union of stored cells, then one weighted sum per cell in tag order.
  std::map<std::string, std::map<std::size_t, std::set<Token>>> cells;
  for (const auto* m : sorted)
    for (const auto& [doc, sentences] : m->cells())
      for (const auto& [index, row] : sentences)
        for (const auto& [word, _] : row) cells[doc][index].insert(word);

  EvidenceMatrix out("combined", eps);
  for (const auto& [doc, sentences] : cells)
    for (const auto& [index, words] : sentences)
      for (const auto& word : words) {
        double p = 0.0;
        for (std::size_t k = 0; k < sorted.size(); ++k) p += lambda[k] * sorted[k]->get(doc, index, word);
        out.set(doc, index, word, p);
      }
  return out;
}

EmResult fit_mixture_weights(const Eigen::MatrixXd& likelihoods, const EmConfig& cfg) {
  const Eigen::Index n = likelihoods.rows();
  const Eigen::Index k = likelihoods.cols();
  if (n == 0) throw DataError("EM: no instances");
  if (k == 0) throw ConfigError("EM: no experts");
  if ((likelihoods.array() <= 0.0).any() || !likelihoods.allFinite())
    throw DataError("EM: instance likelihoods must be positive and finite");

  EmResult r;
  r.weights = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  double ll = log_likelihood(likelihoods, r.weights);
  r.log_likelihood.push_back(ll);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    // E-step: responsibilities proportional to weight * expert likelihood.
    Eigen::MatrixXd resp = likelihoods * r.weights.asDiagonal();
    const Eigen::VectorXd norm = resp.rowwise().sum();
    resp.array().colwise() /= norm.array();
    // M-step: weights are the mean responsibilities.
    r.weights = resp.colwise().mean().transpose();
    r.weights /= r.weights.sum();
    const double next = log_likelihood(likelihoods, r.weights);
    ++r.iterations;
    r.log_likelihood.push_back(next);
    if (next < ll - 1e-10 * std::max(1.0, std::abs(ll)))
      throw std::logic_error("EM: log-likelihood decreased from " + format_double(ll) + " to " + format_double(next));
    const double gain = next - ll;
    ll = next;
    if (gain < cfg.tolerance) break;
  }
  return r;
}

MixtureFit fit_mixture(std::span<const EvidenceMatrix> matrices, const Bitext& bitext, const Vocabulary& vocab,
                       const MixtureFitConfig& cfg) {
  if (matrices.size() < 2) throw ConfigError("fit_mixture needs at least two evidence matrices");
  const auto sorted = by_tag(matrices);
  std::mt19937_64 rng(cfg.seed);
  const auto instances = sample_instances(bitext, vocab, cfg.negatives_per_positive, rng);
  if (instances.empty()) throw DataError("fit_mixture: no labeled instances");

  Eigen::MatrixXd q(static_cast<Eigen::Index>(instances.size()), static_cast<Eigen::Index>(sorted.size()));
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    const Token& word = vocab.token(inst.word);
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      const double p = sorted[k]->get(kBitextDocId, inst.pair, word);
      q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = inst.relevant ? p : 1.0 - p;
    }
  }
  const EmResult em = fit_mixture_weights(q, cfg.em);
  std::map<std::string, double> w;
  for (std::size_t k = 0; k < sorted.size(); ++k) w[sorted[k]->tag()] = em.weights(static_cast<Eigen::Index>(k));
  MixtureFit fit{MixtureWeights(std::move(w)), em.log_likelihood.back(), em.iterations, instances.size()};
  return fit;
}

void write_mixture(const std::string& path, const MixtureWeights& weights, double log_likelihood) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  for (const auto& [tag, w] : weights.weights()) out << tag << '\t' << format_double(w) << '\n';
  out << "#loglik=" << format_double(log_likelihood) << '\n';
}

MixtureWeights load_mixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open for reading");
  std::map<std::string, double> w;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(located(path, number, "expected tag<TAB>weight"));
    try {
      if (!w.emplace(line.substr(0, tab), parse_double(line.substr(tab + 1))).second)
        throw DataError(located(path, number, "duplicate tag"));
    } catch (const std::invalid_argument& e) {
      throw DataError(located(path, number, e.what()));
    }
  }
  try {
    return MixtureWeights(std::move(w));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace clir
