// Command-line front end. Talks to the library only through the C API.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cooc/cooc.h"
#include "json.hpp"

namespace {

using json = nlohmann::ordered_json;

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kIo = 4 };

int exit_code_for(cooc_status s) {
  switch (s) {
    case COOC_OK:
      return kOk;
    case COOC_ERROR_INVALID_ARGUMENT:
      return kUsage;
    case COOC_ERROR_PARSE:
    case COOC_ERROR_DATA:
    case COOC_ERROR_FORMAT_VERSION:
      return kData;
    case COOC_ERROR_IO:
      return kIo;
    default:
      return kInternal;
  }
}

// Thrown to unwind out of a subcommand with a library failure.
struct Failure {
  cooc_status status;
  std::string message;
};

void check(cooc_status s) {
  if (s != COOC_OK) throw Failure{s, cooc_last_error()};
}

// Options shared by every stage that consumes score features.
struct ScoreFlags {
  std::vector<double> thresholds;
  bool no_raw = false;
  bool log_odds = false;
  bool disabled = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--thresholds", thresholds, "Score thresholds for score:gt features")
        ->delimiter(',');
    cmd->add_flag("--no-raw-score", no_raw, "Omit the raw score feature");
    cmd->add_flag("--raw-log-odds", log_odds, "Use logit(score) as the raw score feature");
    cmd->add_flag("--no-score-features", disabled, "Drop every score-derived feature");
  }
  cooc_score_features to_c() const {
    auto s = cooc_score_features_default();
    if (!thresholds.empty()) {
      s.thresholds = thresholds.data();
      s.threshold_count = thresholds.size();
    }
    s.include_raw_score = no_raw ? 0 : 1;
    s.raw_log_odds = log_odds ? 1 : 0;
    s.enabled = disabled ? 0 : 1;
    return s;
  }
};

struct ConceptFlags {
  std::string concepts;
  std::string descriptions;
  int ngram_order = 2;

  void add(CLI::App* cmd) {
    cmd->add_option("--concepts", concepts, "Code-to-concept map (CODE<TAB>c1,c2,...)");
    cmd->add_option("--descriptions", descriptions, "Code descriptions for the n-gram fallback");
    cmd->add_option("--ngram-order", ngram_order, "Maximum n-gram order for descriptions")
        ->check(CLI::PositiveNumber);
  }
  cooc_concept_map* load() const {
    cooc_concept_map* map = nullptr;
    if (concepts.empty() && descriptions.empty())
      check(cooc_concept_map_empty(ngram_order, &map));
    else
      check(cooc_concept_map_load(concepts.empty() ? nullptr : concepts.c_str(),
                                  descriptions.empty() ? nullptr : descriptions.c_str(),
                                  ngram_order, &map));
    return map;
  }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  ~Handle() {
    if (ptr) Free(ptr);
  }
};
using MapHandle = Handle<cooc_concept_map, cooc_concept_map_free>;
using ModelHandle = Handle<cooc_model, cooc_model_free>;

cooc_model* load_model(const std::string& path) {
  cooc_model* m = nullptr;
  check(cooc_model_load(path.c_str(), &m));
  return m;
}

// Every resolved option of a subcommand, for the run manifest.
json resolved_config(const CLI::App* cmd) {
  json cfg = json::object();
  for (const CLI::Option* opt : cmd->get_options()) {
    std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    auto results = opt->reduced_results();
    if (results.empty()) {
      if (opt->get_type_size() == 0)
        cfg[name] = false;
      else
        cfg[name] = opt->get_default_str();
    } else if (results.size() == 1) {
      if (opt->get_type_size() == 0)
        cfg[name] = true;
      else
        cfg[name] = results.front();
    } else {
      cfg[name] = results;
    }
  }
  return cfg;
}

class Manifest {
 public:
  explicit Manifest(const CLI::App* cmd) : cmd_(cmd), start_(std::chrono::steady_clock::now()) {}

  void input(const std::string& key, const std::string& path) {
    if (!path.empty()) inputs_[key] = path;
  }
  void output(const std::string& key, const std::string& path) {
    if (!path.empty()) outputs_[key] = path;
  }
  void seed(std::uint64_t s) { seed_ = s; }
  json& summary() { return summary_; }

  void write(const std::string& path) const {
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m;
    m["subcommand"] = cmd_->get_name();
    m["version"] = cooc_version();
    m["format_versions"] = cooc_format_versions();
    m["config"] = resolved_config(cmd_);
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    if (seed_) m["seed"] = *seed_;
    m["summary"] = summary_;
    m["timings"] = {{"wall_seconds", seconds}};
    std::ofstream out(path);
    out << m.dump(2) << '\n';
    if (!out) throw Failure{COOC_ERROR_IO, "cannot write manifest '" + path + "'"};
  }

 private:
  const CLI::App* cmd_;
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::object();
  json outputs_ = json::object();
  json summary_ = json::object();
  std::optional<std::uint64_t> seed_;
};

std::string manifest_path(const std::string& primary_output) {
  return primary_output + ".manifest.json";
}

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Code co-occurrence modeling and greedy rescoring of auto-coder output", "cooc"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file of option values (flags take precedence)");
  app.set_version_flag("--version", [] {
    return std::string("cooc ") + cooc_version() + "\nformats: " + cooc_format_versions();
  });

  int workers = 0;
  app.add_option("--workers", workers, "Worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus from a JSON spec");
  std::string synth_spec, synth_out;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--spec", synth_spec, "Synthetic corpus spec (JSON)")->required();
  synth->add_option("--out", synth_out, "Existing output directory")->required();
  synth->add_option("--seed", synth_seed, "Override the spec's rng_seed");

  // gen-instances
  auto* gen = app.add_subcommand("gen-instances", "Generate training instances from a corpus");
  std::string gen_corpus, gen_out, gen_errors;
  ConceptFlags gen_map;
  ScoreFlags gen_score;
  auto gen_opts = cooc_gen_options_default();
  bool gen_unweighted = false, gen_omit_manual = false;
  gen->add_option("--corpus", gen_corpus, "Training corpus")->required();
  gen->add_option("--out", gen_out, "Instance file to write")->required();
  gen->add_option("--errors", gen_errors, "Write skipped-record errors here");
  gen->add_option("--top-k", gen_opts.top_k, "Generated codes kept per document")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--neg-rate", gen_opts.neg_subsample_rate, "Negative subsampling rate in (0, 1]")
      ->capture_default_str();
  gen->add_option("--seed", gen_opts.rng_seed, "Subsampling seed")->capture_default_str();
  gen->add_flag("--unweighted-negatives", gen_unweighted, "Do not reweight kept negatives by 1/rate");
  gen->add_flag("--omit-manual-only-score", gen_omit_manual,
                "Drop score features for manual codes absent from GEN");
  gen_map.add(gen);
  gen_score.add(gen);

  // train
  auto* train = app.add_subcommand("train", "Fit the l1-regularized logistic model");
  std::string train_in, train_out;
  auto train_opts = cooc_train_options_default();
  train->add_option("--instances", train_in, "Instance file")->required();
  train->add_option("--out", train_out, "Model file to write")->required();
  train->add_option("--lambda", train_opts.lambda, "l1 penalty")->capture_default_str();
  train->add_option("--max-iter", train_opts.max_iterations, "Iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--tol", train_opts.tolerance, "Relative objective decrease to stop at")
      ->capture_default_str();
  train->add_option("--min-count", train_opts.min_feature_count,
                    "Drop features seen in fewer instances")
      ->capture_default_str();
  train->add_option("--seed", train_opts.seed, "Seed recorded in the model metadata")
      ->capture_default_str();

  // rescore
  auto* rescore = app.add_subcommand("rescore", "Rescore generated codes with a trained model");
  std::string rs_corpus, rs_model, rs_out, rs_errors;
  ConceptFlags rs_map;
  auto rs_opts = cooc_rescore_options_default();
  bool rs_model_only = false, rs_score_free = false, rs_from_current = false, rs_audit = false;
  rescore->add_option("--corpus", rs_corpus, "Corpus whose GEN lists are rescored")->required();
  rescore->add_option("--model", rs_model, "Trained model")->required();
  rescore->add_option("--out", rs_out, "Rescored output")->required();
  rescore->add_option("--errors", rs_errors, "Write skipped-document errors here");
  rescore->add_option("--depth", rs_opts.depth, "Depth of exploration")->capture_default_str();
  rescore->add_option("--alpha", rs_opts.interpolation_weight,
                      "Exponent on each conditional probability")
      ->capture_default_str();
  rescore->add_flag("--model-only", rs_model_only,
                    "Start from 1; the primary score enters only via features");
  rescore->add_flag("--score-free-init", rs_score_free, "Start every code at 1");
  rescore->add_flag("--score-feature-from-current", rs_from_current,
                    "Feed current rescored values to the score features");
  rescore->add_flag("--audit", rs_audit, "Append pop order and applied factors");
  rs_map.add(rescore);

  // eval
  auto* eval = app.add_subcommand("eval", "Precision/recall table and break-even F");
  std::string ev_pred, ev_gold, ev_out, ev_records;
  std::vector<double> ev_thresholds;
  bool ev_interp = false, ev_corpus = false;
  eval->add_option("--predictions", ev_pred, "Rescored output, or a corpus with --from-corpus")
      ->required();
  eval->add_option("--gold", ev_gold, "Corpus holding the manual codes")->required();
  eval->add_option("--out", ev_out, "Plain-text table")->required();
  eval->add_option("--records", ev_records, "Machine-readable key=value records");
  eval->add_option("--thresholds", ev_thresholds, "Report thresholds")->delimiter(',');
  eval->add_flag("--interpolate", ev_interp, "Interpolate the P = R crossing");
  eval->add_flag("--from-corpus", ev_corpus, "Evaluate the GEN lists of a corpus file");

  // case-study
  auto* cs = app.add_subcommand("case-study", "Model vs naive conditional probabilities");
  std::string cs_model, cs_pairs, cs_corpus, cs_out;
  ConceptFlags cs_map;
  cs->add_option("--model", cs_model, "Trained model")->required();
  cs->add_option("--pairs", cs_pairs, "PRED<TAB>GIVEN[<TAB>score] lines")->required();
  cs->add_option("--corpus", cs_corpus, "Corpus for pair counts and naive estimates");
  cs->add_option("--out", cs_out, "Report file")->required();
  cs_map.add(cs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  auto log = [&](const std::string& line) {
    if (!quiet) std::cout << line << '\n';
  };

  try {
    if (*synth) {
      Manifest m(synth);
      cooc_synth_summary s{};
      std::uint64_t seed = synth_seed.value_or(0);
      check(cooc_run_synth(synth_spec.c_str(), synth_out.c_str(), synth_seed ? &seed : nullptr,
                           workers, &s));
      m.input("spec", synth_spec);
      for (const char* f : {"train.tsv", "test.tsv", "concepts.tsv", "summary.json"})
        m.output(f, synth_out + "/" + f);
      m.seed(s.rng_seed);
      m.summary() = {{"train_docs", s.train_docs},
                     {"test_docs", s.test_docs},
                     {"inventory_codes", s.inventory_codes},
                     {"mean_gold", s.mean_gold},
                     {"mean_generated", s.mean_generated},
                     {"generated_precision", s.generated_precision},
                     {"clique_confusion_rate", s.clique_confusion_rate}};
      m.write(synth_out + "/manifest.json");
      std::ostringstream msg;
      msg << "synth: " << s.train_docs << " train, " << s.test_docs << " test documents, "
          << s.inventory_codes << " codes, seed " << s.rng_seed;
      log(msg.str());
    } else if (*gen) {
      Manifest m(gen);
      MapHandle map{gen_map.load()};
      gen_opts.weight_negatives = gen_unweighted ? 0 : 1;
      gen_opts.manual_only_omit_score = gen_omit_manual ? 1 : 0;
      gen_opts.workers = workers;
      gen_opts.score = gen_score.to_c();
      cooc_instance_stats st{};
      check(cooc_run_gen_instances(gen_corpus.c_str(), map.ptr, &gen_opts, gen_out.c_str(),
                                   or_null(gen_errors), &st));
      m.input("corpus", gen_corpus);
      m.input("concepts", gen_map.concepts);
      m.input("descriptions", gen_map.descriptions);
      m.output("instances", gen_out);
      m.output("errors", gen_errors);
      m.seed(gen_opts.rng_seed);
      m.summary() = {{"records", st.records},
                     {"records_skipped", st.records_skipped},
                     {"positives", st.positives},
                     {"negatives_kept", st.negatives_kept},
                     {"negatives_dropped", st.negatives_dropped},
                     {"distinct_features", st.distinct_features}};
      m.write(manifest_path(gen_out));
      std::ostringstream msg;
      msg << "records " << st.records << " (skipped " << st.records_skipped << ")\n"
          << "positives " << st.positives << "\n"
          << "negatives_kept " << st.negatives_kept << "\n"
          << "negatives_dropped " << st.negatives_dropped << "\n"
          << "distinct_features " << st.distinct_features;
      log(msg.str());
    } else if (*train) {
      Manifest m(train);
      train_opts.workers = workers;
      cooc_train_summary s{};
      check(cooc_run_train(train_in.c_str(), &train_opts, train_out.c_str(), &s));
      m.input("instances", train_in);
      m.output("model", train_out);
      m.seed(train_opts.seed);
      m.summary() = {{"objective", s.objective},
                     {"nonzero_weights", s.nonzero_weights},
                     {"iterations", s.iterations},
                     {"instances", s.instances},
                     {"converged", s.converged != 0}};
      m.write(manifest_path(train_out));
      std::ostringstream msg;
      msg.precision(10);
      msg << "lambda " << train_opts.lambda << "\nobjective " << s.objective << "\nnonzero_weights "
          << s.nonzero_weights << "\niterations " << s.iterations
          << (s.converged ? " (converged)" : " (iteration cap reached)");
      log(msg.str());
    } else if (*rescore) {
      Manifest m(rescore);
      MapHandle map{rs_map.load()};
      ModelHandle model{load_model(rs_model)};
      rs_opts.model_only = rs_model_only ? 1 : 0;
      rs_opts.score_free_init = rs_score_free ? 1 : 0;
      rs_opts.score_feature_from_current = rs_from_current ? 1 : 0;
      rs_opts.audit = rs_audit ? 1 : 0;
      rs_opts.workers = workers;
      cooc_rescore_summary s{};
      check(cooc_run_rescore(rs_corpus.c_str(), model.ptr, map.ptr, &rs_opts, rs_out.c_str(),
                             or_null(rs_errors), &s));
      m.input("corpus", rs_corpus);
      m.input("model", rs_model);
      m.input("concepts", rs_map.concepts);
      m.input("descriptions", rs_map.descriptions);
      m.output("rescored", rs_out);
      m.output("errors", rs_errors);
      m.summary() = {{"documents", s.documents}, {"documents_skipped", s.documents_skipped}};
      m.write(manifest_path(rs_out));
      log("rescored " + std::to_string(s.documents) + " documents (skipped " +
          std::to_string(s.documents_skipped) + ")");
    } else if (*eval) {
      Manifest m(eval);
      auto opts = cooc_eval_options_default();
      if (!ev_thresholds.empty()) {
        opts.thresholds = ev_thresholds.data();
        opts.threshold_count = ev_thresholds.size();
      }
      opts.interpolate_break_even = ev_interp ? 1 : 0;
      opts.predictions_are_corpus = ev_corpus ? 1 : 0;
      cooc_eval_summary s{};
      check(cooc_run_eval(ev_pred.c_str(), ev_gold.c_str(), &opts, ev_out.c_str(),
                          or_null(ev_records), &s));
      m.input("predictions", ev_pred);
      m.input("gold", ev_gold);
      m.output("table", ev_out);
      m.output("records", ev_records);
      m.summary() = {{"break_even_f", s.break_even_f},
                     {"break_even_threshold", s.break_even_threshold},
                     {"break_even_precision", s.break_even_precision},
                     {"break_even_recall", s.break_even_recall},
                     {"gold_codes", s.gold_codes}};
      m.write(manifest_path(ev_out));
      if (!quiet) {
        std::ifstream table(ev_out);
        std::cout << table.rdbuf();
      }
    } else if (*cs) {
      Manifest m(cs);
      MapHandle map{cs_map.load()};
      ModelHandle model{load_model(cs_model)};
      check(cooc_run_case_study(model.ptr, map.ptr, cs_pairs.c_str(), or_null(cs_corpus),
                                cs_out.c_str()));
      m.input("model", cs_model);
      m.input("pairs", cs_pairs);
      m.input("corpus", cs_corpus);
      m.input("concepts", cs_map.concepts);
      m.output("report", cs_out);
      m.write(manifest_path(cs_out));
      if (!quiet) {
        std::ifstream report(cs_out);
        std::cout << report.rdbuf();
      }
    }
  } catch (const Failure& f) {
    std::cerr << "cooc " << app.get_subcommands().front()->get_name() << ": " << f.message
              << '\n';
    return exit_code_for(f.status);
  }
  return kOk;
}
