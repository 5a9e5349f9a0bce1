#include "clir/searcher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "clir/error.hpp"
#include "clir/numeric.hpp"

namespace clir {

namespace {

using Matrix = SearcherModel::Matrix;
using Vector = SearcherModel::Vector;

std::span<double> view(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Intermediate values of one forward pass, kept for backpropagation.
struct Forward {
  Matrix embedded;  // X
  Matrix queries, keys, values, attention;
  Matrix contextual;  // H
};

Forward forward(const SearcherModel& m, std::span<const std::size_t> ids) {
  Forward f;
  const auto len = static_cast<Eigen::Index>(ids.size());
  f.embedded.resize(len, m.dim());
  for (Eigen::Index j = 0; j < len; ++j) f.embedded.row(j) = m.foreign_emb.row(static_cast<Eigen::Index>(ids[j]));
  if (m.depth() == 0) {
    f.contextual = f.embedded;
    return f;
  }
  f.queries = f.embedded * m.query_proj;
  f.keys = f.embedded * m.key_proj;
  f.values = f.embedded * m.value_proj;
  Matrix scores = (f.queries * f.keys.transpose()) / std::sqrt(static_cast<double>(m.dim()));
  f.attention.resize(len, len);
  for (Eigen::Index r = 0; r < len; ++r) {
    const double top = scores.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (scores.row(r).array() - top).exp().matrix();
    f.attention.row(r) = e / e.sum();
  }
  f.contextual = f.embedded + f.attention * f.values;
  return f;
}

// Propagates dL/dH back to the parameters touched by this sentence.
void backward(const SearcherModel& m, std::span<const std::size_t> ids, const Forward& f, const Matrix& d_contextual,
              SearcherGradient& g) {
  Matrix d_embedded = d_contextual;
  if (m.depth() == 1) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(m.dim()));
    const Matrix d_attention = d_contextual * f.values.transpose();
    const Matrix d_values = f.attention.transpose() * d_contextual;
    // Row-wise softmax Jacobian.
    const Eigen::VectorXd inner = (d_attention.array() * f.attention.array()).rowwise().sum();
    const Matrix d_scores = (f.attention.array() * (d_attention.colwise() - inner).array()).matrix();
    const Matrix d_queries = d_scores * f.keys * scale;
    const Matrix d_keys = d_scores.transpose() * f.queries * scale;
    g.query_proj.noalias() += f.embedded.transpose() * d_queries;
    g.key_proj.noalias() += f.embedded.transpose() * d_keys;
    g.value_proj.noalias() += f.embedded.transpose() * d_values;
    d_embedded.noalias() += d_queries * m.query_proj.transpose();
    d_embedded.noalias() += d_keys * m.key_proj.transpose();
    d_embedded.noalias() += d_values * m.value_proj.transpose();
  }
  for (std::size_t j = 0; j < ids.size(); ++j)
    g.foreign_emb.row(static_cast<Eigen::Index>(ids[j])) += d_embedded.row(static_cast<Eigen::Index>(j));
}

void write_matrix(std::ostream& out, const char* name, const Matrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << format_double(m(r, c));
    out << '\n';
  }
}

Matrix read_matrix(std::istream& in, const std::string& path, const char* name, Eigen::Index rows, Eigen::Index cols) {
  std::string tag;
  Eigen::Index r = 0, c = 0;
  if (!(in >> tag >> r >> c) || tag != name || r != rows || c != cols)
    throw DataError(path + ": expected block '" + name + " " + std::to_string(rows) + " " + std::to_string(cols) + "'");
  Matrix m(rows, cols);
  std::string field;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!(in >> field)) throw DataError(path + ": truncated block '" + name + "'");
      try {
        m(i, j) = parse_double(field);
      } catch (const std::invalid_argument& e) {
        throw DataError(path + ": block '" + name + "': " + e.what());
      }
    }
  if (!m.allFinite()) throw DataError(path + ": non-finite value in block '" + name + "'");
  return m;
}

std::uint64_t token_hash(const std::vector<Token>& tokens) { return Vocabulary(tokens).hash(); }

std::vector<Token> foreign_vocabulary(const Bitext& bitext, std::size_t max_size, std::size_t min_count) {
  std::unordered_map<Token, std::size_t> counts;
  for (const auto& p : bitext)
    for (const auto& t : p.foreign) ++counts[t];
  counts.erase(SearcherModel::kUnknown);
  std::vector<std::pair<Token, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);
  while (!ranked.empty() && ranked.back().second < min_count) ranked.pop_back();
  std::vector<Token> out;
  for (auto& [t, _] : ranked) out.push_back(t);
  return out;
}

}  // namespace

SearcherModel::SearcherModel(std::vector<Token> foreign, Vocabulary english, int dim, int depth)
    : foreign_(std::move(foreign)), english_(std::move(english)), depth_(depth) {
  if (dim < 1) throw ConfigError("searcher: embedding dimension must be >= 1");
  if (depth != 0 && depth != 1) throw ConfigError("searcher: attention depth must be 0 or 1");
  for (std::size_t i = 0; i < foreign_.size(); ++i) {
    if (foreign_[i] == kUnknown) throw DataError("searcher: foreign vocabulary contains the reserved UNK token");
    if (!foreign_lookup_.emplace(foreign_[i], i + 1).second)
      throw DataError("searcher: duplicate foreign token '" + foreign_[i] + "'");
  }
  const auto f = static_cast<Eigen::Index>(foreign_.size() + 1);
  const auto k = static_cast<Eigen::Index>(english_.size());
  foreign_emb = Matrix::Zero(f, dim);
  english_emb = Matrix::Zero(k, dim);
  bias = Vector::Zero(k);
  if (depth_ == 1) {
    query_proj = Matrix::Zero(dim, dim);
    key_proj = Matrix::Zero(dim, dim);
    value_proj = Matrix::Zero(dim, dim);
  }
}

std::size_t SearcherModel::foreign_index(const Token& t) const {
  const auto it = foreign_lookup_.find(t);
  return it == foreign_lookup_.end() ? 0 : it->second;
}

std::vector<std::size_t> SearcherModel::encode(const Sentence& s) const {
  std::vector<std::size_t> ids;
  ids.reserve(s.size());
  for (const auto& t : s) ids.push_back(foreign_index(t));
  return ids;
}

SearcherModel::Matrix SearcherModel::contextualize(std::span<const std::size_t> ids) const {
  return forward(*this, ids).contextual;
}

double SearcherModel::logit(const Matrix& contextual, std::size_t word, Eigen::Index* argmax) const {
  const Vector dots = contextual * english_emb.row(static_cast<Eigen::Index>(word)).transpose();
  Eigen::Index best = 0;
  const double top = dots.maxCoeff(&best);
  if (argmax) *argmax = best;
  return top + bias(static_cast<Eigen::Index>(word));
}

std::vector<std::span<double>> SearcherModel::parameters() {
  std::vector<std::span<double>> out{view(foreign_emb), view(english_emb), view(bias)};
  if (depth_ == 1) {
    out.push_back(view(query_proj));
    out.push_back(view(key_proj));
    out.push_back(view(value_proj));
  }
  return out;
}

std::uint64_t SearcherModel::foreign_hash() const { return token_hash(foreign_); }

double searcher_score(const SearcherModel& model, const Sentence& s, const Token& word) {
  const auto idx = model.english().index(word);
  if (!idx) throw DataError("searcher: '" + word + "' is not in the English vocabulary");
  if (s.empty()) throw DataError("searcher: empty sentence");
  const auto ids = model.encode(s);
  return sigmoid(model.logit(model.contextualize(ids), *idx));
}

SearcherGradient::SearcherGradient(const SearcherModel& like)
    : foreign_emb(Matrix::Zero(like.foreign_emb.rows(), like.foreign_emb.cols())),
      english_emb(Matrix::Zero(like.english_emb.rows(), like.english_emb.cols())),
      bias(Vector::Zero(like.bias.size())),
      query_proj(Matrix::Zero(like.query_proj.rows(), like.query_proj.cols())),
      key_proj(Matrix::Zero(like.key_proj.rows(), like.key_proj.cols())),
      value_proj(Matrix::Zero(like.value_proj.rows(), like.value_proj.cols())) {}

void SearcherGradient::set_zero() {
  foreign_emb.setZero();
  english_emb.setZero();
  bias.setZero();
  query_proj.setZero();
  key_proj.setZero();
  value_proj.setZero();
}

std::vector<std::span<double>> SearcherGradient::parameters() {
  std::vector<std::span<double>> out{view(foreign_emb), view(english_emb), view(bias)};
  if (query_proj.size() != 0) {
    out.push_back(view(query_proj));
    out.push_back(view(key_proj));
    out.push_back(view(value_proj));
  }
  return out;
}

double searcher_loss(const SearcherModel& model, std::span<const SearcherExample> batch, SearcherGradient* grad) {
  double total = 0.0;
  for (const auto& ex : batch) {
    if (ex.foreign.empty()) continue;
    const Forward f = forward(model, ex.foreign);
    Matrix d_contextual;
    if (grad) d_contextual = Matrix::Zero(f.contextual.rows(), f.contextual.cols());
    for (std::size_t t = 0; t < ex.words.size(); ++t) {
      Eigen::Index best = 0;
      const double z = model.logit(f.contextual, ex.words[t], &best);
      const double y = ex.labels[t];
      total -= y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z);
      if (!grad) continue;
      const double g = sigmoid(z) - y;
      const auto w = static_cast<Eigen::Index>(ex.words[t]);
      grad->english_emb.row(w) += g * f.contextual.row(best);
      grad->bias(w) += g;
      d_contextual.row(best) += g * model.english_emb.row(w);
    }
    if (grad) backward(model, ex.foreign, f, d_contextual, *grad);
  }
  return total;
}

SearcherTraining train_searcher(const Bitext& bitext, const Vocabulary& vocab, const SearcherConfig& cfg) {
  if (bitext.empty()) throw DataError("searcher: empty bitext");
  if (vocab.empty()) throw DataError("searcher: empty English vocabulary");
  if (cfg.batch_size == 0) throw ConfigError("searcher: batch size must be >= 1");

  SearcherTraining out{SearcherModel(foreign_vocabulary(bitext, cfg.max_foreign_vocab, cfg.min_foreign_count), vocab, cfg.dim, cfg.depth), {}};
  SearcherModel& model = out.model;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> init(0.0, cfg.init_scale);
  for (auto block : model.parameters())
    if (block.data() != model.bias.data())
      for (double& v : block) v = init(rng);

  const std::size_t k = vocab.size();
  const bool full_vocab = k <= cfg.full_vocab_max;
  std::uniform_int_distribution<std::size_t> pick(0, k - 1);

  std::vector<SearcherExample> examples(bitext.size());
  std::vector<std::vector<std::size_t>> positives(bitext.size());
  for (std::size_t i = 0; i < bitext.size(); ++i) {
    examples[i].foreign = model.encode(bitext[i].foreign);
    for (const auto& t : bitext[i].english)
      if (auto idx = vocab.index(t)) positives[i].push_back(*idx);
    std::sort(positives[i].begin(), positives[i].end());
    positives[i].erase(std::unique(positives[i].begin(), positives[i].end()), positives[i].end());
  }

  // Fills targets for pair i: all positives, then negatives from vocab \ s_e.
  auto fill_targets = [&](std::size_t i) {
    auto& ex = examples[i];
    const auto& pos = positives[i];
    ex.words.assign(pos.begin(), pos.end());
    ex.labels.assign(pos.size(), 1.0);
    if (pos.size() == k) return;
    if (full_vocab) {
      for (std::size_t w = 0, p = 0; w < k; ++w) {
        if (p < pos.size() && pos[p] == w) {
          ++p;
          continue;
        }
        ex.words.push_back(w);
        ex.labels.push_back(0.0);
      }
      return;
    }
    const std::unordered_set<std::size_t> in_sentence(pos.begin(), pos.end());
    for (std::size_t n = 0; n < pos.size() * cfg.negatives_per_positive; ++n) {
      std::size_t w = pick(rng);
      while (in_sentence.count(w)) w = pick(rng);
      ex.words.push_back(w);
      ex.labels.push_back(0.0);
    }
  };
  if (full_vocab)
    for (std::size_t i = 0; i < bitext.size(); ++i) fill_targets(i);

  std::vector<std::size_t> order(bitext.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SearcherGradient grad(model);
  SearcherGradient squares(model);  // AdaGrad sums of squared gradients
  std::vector<SearcherExample> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t b = start; b < stop; ++b) {
        if (!full_vocab) fill_targets(order[b]);
        batch.push_back(examples[order[b]]);
      }
      grad.set_zero();
      epoch_total += searcher_loss(model, batch, &grad);
      const double scale = 1.0 / static_cast<double>(batch.size());
      auto params = model.parameters();
      auto grads = grad.parameters();
      auto sums = squares.parameters();
      for (std::size_t p = 0; p < params.size(); ++p)
        for (std::size_t j = 0; j < params[p].size(); ++j) {
          const double g = grads[p][j] * scale;
          if (g == 0.0) continue;
          if (cfg.optimizer == SearcherOptimizer::sgd) {
            params[p][j] -= cfg.learning_rate * g;
          } else {
            sums[p][j] += g * g;
            params[p][j] -= cfg.learning_rate * g / (std::sqrt(sums[p][j]) + 1e-8);
          }
        }
    }
    const double mean = epoch_total / static_cast<double>(bitext.size());
    if (!std::isfinite(mean))
      throw DataError("searcher: training diverged in epoch " + std::to_string(epoch + 1) + "; lower the learning rate");
    out.epoch_loss.push_back(mean);
  }
  return out;
}

void save_searcher(const std::string& path, const SearcherModel& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << "searcher-model 1\n";
  out << "dim " << model.dim() << '\n';
  out << "depth " << model.depth() << '\n';
  out << "foreign_vocab " << model.foreign_tokens().size() << ' ' << model.foreign_hash() << '\n';
  out << "english_vocab " << model.english().size() << ' ' << model.english().hash() << '\n';
  for (const auto& t : model.foreign_tokens()) out << t << '\n';
  for (const auto& t : model.english().tokens()) out << t << '\n';
  write_matrix(out, "foreign_emb", model.foreign_emb);
  write_matrix(out, "english_emb", model.english_emb);
  write_matrix(out, "bias", model.bias);
  if (model.depth() == 1) {
    write_matrix(out, "query_proj", model.query_proj);
    write_matrix(out, "key_proj", model.key_proj);
    write_matrix(out, "value_proj", model.value_proj);
  }
}

SearcherModel load_searcher(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open for reading");
  std::string magic, key;
  int version = 0, dim = 0, depth = 0;
  std::size_t nf = 0, ne = 0;
  std::uint64_t hf = 0, he = 0;
  if (!(in >> magic >> version) || magic != "searcher-model" || version != 1)
    throw DataError(path + ": not a searcher model (expected 'searcher-model 1')");
  if (!(in >> key >> dim) || key != "dim") throw DataError(path + ": missing dim");
  if (!(in >> key >> depth) || key != "depth") throw DataError(path + ": missing depth");
  if (!(in >> key >> nf >> hf) || key != "foreign_vocab") throw DataError(path + ": missing foreign_vocab");
  if (!(in >> key >> ne >> he) || key != "english_vocab") throw DataError(path + ": missing english_vocab");
  std::vector<Token> foreign(nf), english(ne);
  for (auto& t : foreign)
    if (!(in >> t)) throw DataError(path + ": truncated foreign vocabulary");
  for (auto& t : english)
    if (!(in >> t)) throw DataError(path + ": truncated English vocabulary");
  if (token_hash(foreign) != hf) throw DataError(path + ": foreign vocabulary hash mismatch");
  if (token_hash(english) != he) throw DataError(path + ": English vocabulary hash mismatch");
  SearcherModel model(std::move(foreign), Vocabulary(std::move(english)), dim, depth);
  model.foreign_emb = read_matrix(in, path, "foreign_emb", model.foreign_emb.rows(), dim);
  model.english_emb = read_matrix(in, path, "english_emb", model.english_emb.rows(), dim);
  model.bias = read_matrix(in, path, "bias", model.bias.size(), 1);
  if (depth == 1) {
    model.query_proj = read_matrix(in, path, "query_proj", dim, dim);
    model.key_proj = read_matrix(in, path, "key_proj", dim, dim);
    model.value_proj = read_matrix(in, path, "value_proj", dim, dim);
  }
  return model;
}

SearcherGenerator::SearcherGenerator(const SearcherModel& model, std::string tag)
    : model_(model), tag_(std::move(tag)) {}

std::vector<std::pair<Token, double>> SearcherGenerator::evaluate(const Document& doc, std::size_t unit,
                                                                  std::span<const Token> words) const {
  const Sentence s = doc.kind == DocumentKind::text ? doc.sentences.at(unit) : doc.utterances.at(unit).one_best();
  std::vector<std::pair<Token, double>> out;
  if (s.empty()) return out;
  const auto ids = model_.encode(s);
  const Matrix contextual = model_.contextualize(ids);
  for (const auto& w : words)
    if (auto idx = model_.english().index(w)) out.emplace_back(w, sigmoid(model_.logit(contextual, *idx)));
  return out;
}

}  // namespace clir
