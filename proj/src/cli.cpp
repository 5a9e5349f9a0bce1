#include "clir/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "clir/combiner.hpp"
#include "clir/corpus.hpp"
#include "clir/error.hpp"
#include "clir/evidence.hpp"
#include "clir/mt_ensemble.hpp"
#include "clir/relevance.hpp"
#include "clir/scorer.hpp"
#include "clir/searcher.hpp"
#include "clir/synth.hpp"
#include "clir/thresholder.hpp"

namespace clir {

namespace {

namespace fs = std::filesystem;

// Flat `key = value` file; '#' starts a comment. Keys may repeat.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t number = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(located(path, number, "expected key = value"));
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

// Appends config-file settings for every option the command line leaves unset,
// so flags override the file and the file overrides defaults.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!path) return args;
  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(args.begin(), args.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  std::vector<std::string> extra;
  for (const auto& [key, value] : read_config(*path)) {
    if (given(key)) continue;
    extra.push_back("--" + key);
    extra.push_back(value);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing required input: ") + what);
  if (!fs::exists(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

// Loaded evidence sources, kept alive for the generators that reference them.
struct Sources {
  std::vector<std::string> table_paths;
  std::string mt_model_path;
  std::string hyps_path;
  std::string searcher_path;

  std::vector<TranslationTable> tables;
  std::optional<MtEnsembleModel> mt_model;
  std::optional<MtHypothesisSet> hyps;
  std::optional<SearcherModel> searcher;
  std::vector<std::unique_ptr<EvidenceGenerator>> generators;

  void add_options(CLI::App& app) {
    app.add_option("--tt", table_paths, "Translation table TSV (repeatable)");
    app.add_option("--mt-model", mt_model_path, "MT ensemble model file");
    app.add_option("--hyps", hyps_path, "MT hypotheses TSV");
    app.add_option("--searcher", searcher_path, "Searcher model file");
  }

  void load() {
    tables.reserve(table_paths.size());
    for (const auto& p : table_paths) {
      require_file(p, "translation table");
      tables.push_back(load_translation_table(p));
    }
    for (const auto& t : tables) generators.push_back(std::make_unique<TranslationTableGenerator>(t));
    if (!mt_model_path.empty()) {
      require_file(mt_model_path, "MT ensemble model");
      require_file(hyps_path, "MT hypotheses (--hyps)");
      mt_model = load_mt_ensemble(mt_model_path);
      hyps = load_mt_hypotheses(hyps_path);
      generators.push_back(std::make_unique<MtEnsembleGenerator>(*mt_model, *hyps));
    }
    if (!searcher_path.empty()) {
      require_file(searcher_path, "searcher model");
      searcher = load_searcher(searcher_path);
      generators.push_back(std::make_unique<SearcherGenerator>(*searcher));
    }
    if (generators.empty()) throw ConfigError("no evidence generator enabled (use --tt, --mt-model, --searcher)");
  }
};

MixtureFit fit_on_bitext(const Sources& sources, const Bitext& bitext, std::size_t vocab_size,
                         const MixtureFitConfig& cfg, double eps) {
  const auto vocab = Vocabulary::from_bitext(bitext, vocab_size);
  const Corpus held_out = bitext_corpus(bitext);
  std::vector<EvidenceMatrix> matrices;
  for (const auto& g : sources.generators)
    matrices.push_back(build_evidence_for_words(*g, held_out, vocab.tokens(), eps));
  return fit_mixture(matrices, bitext, vocab, cfg);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(p.string() + ": cannot open for writing");
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-lingual set retrieval: evidence generation, combination, thresholding and scoring"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  unsigned long long seed = 1;
  double eps = kEpsilon;
  std::size_t jobs = 1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", seed, "Seed for every random choice")->capture_default_str();
    sub->add_option("--epsilon", eps, "Probability floor")->capture_default_str();
  };

  // synth
  SynthSpec spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted relevance");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", spec.seed)->capture_default_str();
  synth->add_option("--foreign-vocab", spec.foreign_vocab)->capture_default_str();
  synth->add_option("--english-vocab", spec.english_vocab)->capture_default_str();
  synth->add_option("--noise", spec.noise, "Dictionary / confusion / MT noise rate")->capture_default_str();
  synth->add_option("--docs", spec.docs)->capture_default_str();
  synth->add_option("--min-sentences", spec.min_sentences)->capture_default_str();
  synth->add_option("--max-sentences", spec.max_sentences)->capture_default_str();
  synth->add_option("--min-sentence-len", spec.min_sentence_len)->capture_default_str();
  synth->add_option("--max-sentence-len", spec.max_sentence_len)->capture_default_str();
  synth->add_option("--queries", spec.queries)->capture_default_str();
  synth->add_option("--max-phrases", spec.max_phrases)->capture_default_str();
  synth->add_option("--max-phrase-len", spec.max_phrase_len)->capture_default_str();
  synth->add_option("--multiword-rate", spec.multiword_rate)->capture_default_str();
  synth->add_option("--speech-fraction", spec.speech_fraction)->capture_default_str();
  synth->add_option("--confusion-depth", spec.confusion_depth)->capture_default_str();
  synth->add_option("--relevance-rate", spec.relevance_rate)->capture_default_str();
  synth->add_option("--bitext-pairs", spec.bitext_pairs)->capture_default_str();
  synth->add_option("--heldout-pairs", spec.heldout_pairs)->capture_default_str();
  synth->add_option("--tables", spec.tables)->capture_default_str();

  // train-searcher
  SearcherConfig scfg;
  std::string bitext_path, model_out;
  std::size_t vocab_size = 50000;
  auto* train = app.add_subcommand("train-searcher", "Train the shared-embedding scorer on bitext");
  train->add_option("--bitext", bitext_path)->required();
  train->add_option("--out", model_out)->required();
  train->add_option("--vocab-size", vocab_size)->capture_default_str();
  train->add_option("--dim", scfg.dim)->capture_default_str();
  train->add_option("--depth", scfg.depth, "Self-attention layers (0 or 1)")->capture_default_str();
  train->add_option("--epochs", scfg.epochs)->capture_default_str();
  train->add_option("--batch", scfg.batch_size)->capture_default_str();
  train->add_option("--lr", scfg.learning_rate)->capture_default_str();
  train->add_option("--neg", scfg.negatives_per_positive)->capture_default_str();
  train->add_option("--full-vocab-max", scfg.full_vocab_max)->capture_default_str();
  train->add_option("--seed", scfg.seed)->capture_default_str();
  train->add_option("--min-count", scfg.min_foreign_count, "Foreign tokens seen fewer times map to UNK")
      ->capture_default_str();
  train->add_option("--optimizer", scfg.optimizer, "sgd or adagrad")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, SearcherOptimizer>{{"sgd", SearcherOptimizer::sgd}, {"adagrad", SearcherOptimizer::adagrad}}))
      ->capture_default_str();

  // fit-ensemble
  LogisticFitConfig lcfg;
  std::string hyps_path;
  auto* ensemble = app.add_subcommand("fit-ensemble", "Fit the MT-system logistic regression on bitext");
  ensemble->add_option("--bitext", bitext_path)->required();
  ensemble->add_option("--hyps", hyps_path)->required();
  ensemble->add_option("--out", model_out)->required();
  ensemble->add_option("--vocab-size", vocab_size)->capture_default_str();
  ensemble->add_option("--neg", lcfg.negatives_per_positive)->capture_default_str();
  ensemble->add_option("--l2", lcfg.l2)->capture_default_str();
  ensemble->add_option("--lr", lcfg.learning_rate, "First trial step of the gradient solver")->capture_default_str();
  ensemble->add_option("--solver", lcfg.solver, "newton or gradient")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, LogisticSolver>{{"newton", LogisticSolver::newton}, {"gradient", LogisticSolver::gradient}}))
      ->capture_default_str();
  ensemble->add_option("--seed", lcfg.seed)->capture_default_str();

  // fit-mixture
  Sources mix_sources;
  MixtureFitConfig mcfg;
  auto* mixture = app.add_subcommand("fit-mixture", "Fit evidence mixture weights by EM on bitext");
  mixture->add_option("--bitext", bitext_path)->required();
  mixture->add_option("--out", model_out)->required();
  mixture->add_option("--vocab-size", vocab_size)->capture_default_str();
  mixture->add_option("--neg", mcfg.negatives_per_positive)->capture_default_str();
  add_common(mixture);
  mix_sources.add_options(*mixture);

  // dump-evidence
  Sources dump_sources;
  std::string corpus_path, queries_path, evidence_out;
  auto* dump = app.add_subcommand("dump-evidence", "Write one generator's evidence matrix as TSV");
  dump->add_option("--corpus", corpus_path)->required();
  dump->add_option("--queries", queries_path)->required();
  dump->add_option("--out", evidence_out)->required();
  add_common(dump);
  dump_sources.add_options(*dump);

  // retrieve
  Sources ret_sources;
  ThresholdConfig tcfg;
  std::string weights_arg, out_dir, run_tag = "clir";
  auto* retrieve = app.add_subcommand("retrieve", "Rank, threshold and return a document set per query");
  retrieve->add_option("--corpus", corpus_path)->required();
  retrieve->add_option("--queries", queries_path)->required();
  retrieve->add_option("--out", out_dir, "Output directory")->required();
  retrieve->add_option("--weights", weights_arg, "Mixture weights file, 'fit' or 'uniform'");
  retrieve->add_option("--bitext", bitext_path, "Bitext for --weights fit");
  retrieve->add_option("--vocab-size", vocab_size)->capture_default_str();
  retrieve->add_option("--beta", tcfg.beta)->capture_default_str();
  retrieve->add_option("--gamma", tcfg.gamma)->capture_default_str();
  retrieve->add_option("--run-tag", run_tag)->capture_default_str();
  retrieve->add_option("--jobs", jobs, "Worker threads for ranking")->capture_default_str();
  add_common(retrieve);
  ret_sources.add_options(*retrieve);

  // evaluate
  std::string judgments_path, returned_path, report_out;
  double beta = kDefaultBeta;
  auto* evaluate = app.add_subcommand("evaluate", "Score returned sets against judgments (mAQWV)");
  evaluate->add_option("--corpus", corpus_path)->required();
  evaluate->add_option("--judgments", judgments_path)->required();
  evaluate->add_option("--returned", returned_path)->required();
  evaluate->add_option("--beta", beta)->capture_default_str();
  evaluate->add_option("--out", report_out, "Score report TSV (default: stdout)");

  std::vector<std::string> args;
  try {
    args = apply_config(raw_args);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*synth) {
      const auto data = generate(spec);
      write_dataset(synth_out, data);
      std::size_t gold = 0;
      for (const auto& [_, docs] : data.judgments) gold += docs.size();
      out << "synth: docs=" << data.corpus.size() << " queries=" << data.queries.size() << " relevant=" << gold
          << " bitext=" << data.bitext.size() << " tables=" << data.tables.size() << " out=" << synth_out << '\n';
    } else if (*train) {
      require_file(bitext_path, "bitext");
      const auto bitext = load_bitext(bitext_path);
      const auto vocab = Vocabulary::from_bitext(bitext, vocab_size);
      const auto result = train_searcher(bitext, vocab, scfg);
      save_searcher(model_out, result.model);
      out << "train-searcher: pairs=" << bitext.size() << " vocab=" << vocab.size()
          << " epochs=" << result.epoch_loss.size()
          << " final_loss=" << format_double(result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back()) << '\n';
    } else if (*ensemble) {
      require_file(bitext_path, "bitext");
      require_file(hyps_path, "MT hypotheses");
      const auto bitext = load_bitext(bitext_path);
      const auto hyps = load_mt_hypotheses(hyps_path);
      const auto vocab = Vocabulary::from_bitext(bitext, vocab_size);
      const auto fit = fit_mt_ensemble(hyps, bitext, vocab, lcfg);
      save_mt_ensemble(model_out, fit.model);
      out << "fit-ensemble: systems=" << fit.model.systems.size() << " iterations=" << fit.iterations
          << " final_loss=" << format_double(fit.loss) << '\n';
    } else if (*mixture) {
      require_file(bitext_path, "bitext");
      mix_sources.load();
      const auto bitext = load_bitext(bitext_path);
      mcfg.seed = seed;
      const auto fit = fit_on_bitext(mix_sources, bitext, vocab_size, mcfg, eps);
      write_mixture(model_out, fit.weights, fit.log_likelihood);
      out << "fit-mixture: generators=" << fit.weights.size() << " instances=" << fit.instances
          << " iterations=" << fit.iterations << " loglik=" << format_double(fit.log_likelihood) << '\n';
    } else if (*dump) {
      require_file(corpus_path, "corpus");
      require_file(queries_path, "queries");
      dump_sources.load();
      if (dump_sources.generators.size() != 1) throw ConfigError("dump-evidence takes exactly one generator");
      const auto corpus = load_corpus(corpus_path);
      const auto queries = load_queries(queries_path);
      const auto m = build_evidence(*dump_sources.generators.front(), corpus, queries, eps);
      write_evidence(evidence_out, m);
      out << "dump-evidence: generator=" << m.tag() << " entries=" << m.entries() << '\n';
    } else if (*retrieve) {
      tcfg.eps = eps;
      tcfg.validate();
      require_file(corpus_path, "corpus");
      require_file(queries_path, "queries");
      ret_sources.load();
      const auto corpus = load_corpus(corpus_path);
      if (corpus.empty()) throw DataError(corpus_path + ": corpus is empty");
      std::vector<Query> lexical;
      std::size_t skipped = 0;
      for (auto& q : load_queries(queries_path)) {
        if (q.kind != QueryKind::lexical) {
          err << "warning: query '" << q.id << "': unsupported query type " << to_string(q.kind) << "; skipped\n";
          ++skipped;
          continue;
        }
        lexical.push_back(std::move(q));
      }

      std::vector<EvidenceMatrix> matrices;
      for (const auto& g : ret_sources.generators) matrices.push_back(build_evidence(*g, corpus, lexical, eps));
      EvidenceMatrix evidence = matrices.front();
      if (matrices.size() > 1) {
        std::string mode = weights_arg;
        if (mode.empty()) mode = bitext_path.empty() ? "uniform" : "fit";
        MixtureWeights weights;
        if (mode == "uniform") {
          std::vector<std::string> tags;
          for (const auto& m : matrices) tags.push_back(m.tag());
          weights = MixtureWeights::uniform(tags);
        } else if (mode == "fit") {
          require_file(bitext_path, "bitext (needed for --weights fit)");
          MixtureFitConfig fit_cfg;
          fit_cfg.seed = seed;
          weights = fit_on_bitext(ret_sources, load_bitext(bitext_path), vocab_size, fit_cfg, eps).weights;
        } else {
          require_file(mode, "mixture weights");
          weights = load_mixture(mode);
        }
        evidence = combine(matrices, weights);
      }

      // Per-query work is independent; results land in fixed slots so output
      // order never depends on scheduling.
      std::vector<RankedList> lists(lexical.size());
      std::vector<CutoffDecision> decisions(lexical.size());
      auto work = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < lexical.size(); i += stride) {
          lists[i] = rank(evidence, corpus, lexical[i]);
          decisions[i] = decide(lists[i], tcfg);
        }
      };
      const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, lexical.size()));
      if (workers == 1) {
        work(0, 1);
      } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for (std::size_t w = 0; w < workers; ++w)
          pool.emplace_back([&, w] {
            try {
              work(w, workers);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
      }

      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (ec) throw DataError(out_dir + ": cannot create directory: " + ec.message());
      auto run = open_out(fs::path(out_dir) / "run.txt");
      auto cutoffs = open_out(fs::path(out_dir) / "cutoffs.tsv");
      auto returned = open_out(fs::path(out_dir) / "returned.tsv");
      std::size_t total_returned = 0;
      for (std::size_t i = 0; i < lexical.size(); ++i) {
        write_run(run, lists[i], run_tag);
        write_cutoff(cutoffs, decisions[i]);
        for (const auto& d : returned_documents(lists[i], decisions[i])) returned << lists[i].query << '\t' << d << '\n';
        total_returned += decisions[i].k;
      }
      out << "retrieve: queries=" << lexical.size() << " skipped=" << skipped << " docs=" << corpus.size()
          << " generators=" << matrices.size() << " returned=" << total_returned << '\n';
    } else if (*evaluate) {
      require_file(corpus_path, "corpus");
      require_file(judgments_path, "judgments");
      require_file(returned_path, "returned sets");
      const auto corpus = load_corpus(corpus_path);
      const auto judgments = load_judgments(judgments_path);
      const auto score = score_run(load_returned(returned_path), judgments, corpus, beta);
      if (report_out.empty()) {
        write_score_report(out, score);
      } else {
        auto report = open_out(report_out);
        write_score_report(report, score);
      }
      out << "evaluate: n_q=" << score.n_q << " excluded=" << score.excluded.size()
          << " beta=" << format_decimal(score.beta) << " mAQWV=" << format_decimal(score.maqwv) << '\n';
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const UnsupportedQuery& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace clir
