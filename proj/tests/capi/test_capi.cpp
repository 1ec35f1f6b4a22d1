#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cooc/cooc.h"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

class Scratch {
 public:
  Scratch() : dir_(fs::temp_directory_path() / ("cooc_capi_" + std::to_string(::getpid()))) {
    fs::create_directories(dir_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return path(name);
  }
  std::string dir() const { return dir_.string(); }

 private:
  fs::path dir_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("version strings") {
  CHECK(std::string(cooc_version()).size() > 0);
  std::string formats = cooc_format_versions();
  CHECK(formats.find("model=1") != std::string::npos);
  CHECK(formats.find("instances=1") != std::string::npos);
}

TEST_CASE("code canonicalization and error positions") {
  char out[8];
  size_t pos = 99;
  CHECK(cooc_code_canonical("0dbj3zz", out, &pos) == COOC_OK);
  CHECK(std::string(out) == "0DBJ3ZZ");
  CHECK(cooc_code_canonical("0DB-3ZZ", out, &pos) == COOC_ERROR_PARSE);
  CHECK(pos == 3);
  CHECK(std::string(cooc_last_error()).find("position 3") != std::string::npos);
  CHECK(cooc_code_canonical("0DBJ3Z", out, &pos) == COOC_ERROR_PARSE);
  CHECK(pos == 6);
  CHECK(cooc_code_canonical(nullptr, out, &pos) == COOC_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("axis patterns and the buffer protocol") {
  char buf[32];
  size_t required = 0;
  CHECK(cooc_axis_match_pattern("BP07ZZZ", "BP08ZZZ", buf, sizeof buf, &required) == COOC_OK);
  CHECK(std::string(buf) == "BP10111");
  CHECK(required == 8);
  CHECK(cooc_axis_diff_pattern("BP07ZZZ", "BP08ZZZ", buf, 4, &required) ==
        COOC_ERROR_BUFFER_TOO_SMALL);
  CHECK(required == std::strlen("BP1{7/8}111") + 1);
  CHECK(cooc_axis_diff_pattern("BP07ZZZ", "BP08ZZZ", buf, required, &required) == COOC_OK);
  CHECK(std::string(buf) == "BP1{7/8}111");
  CHECK(cooc_axis_match_pattern("BP07ZZZ", "0SR901Z", buf, sizeof buf, &required) ==
        COOC_ERROR_DATA);
}

TEST_CASE("concept maps") {
  Scratch s;
  auto concepts = s.write("c.tsv", "0DBJ3ZZ\tappendix,excision\n");
  auto descs = s.write("d.tsv", "30243K1\tFrozen Plasma\n");
  cooc_concept_map* map = nullptr;
  REQUIRE(cooc_concept_map_load(concepts.c_str(), descs.c_str(), 2, &map) == COOC_OK);
  CHECK(cooc_concept_map_size(map) == 1);
  char buf[128];
  size_t required = 0;
  CHECK(cooc_concepts_for(map, "0DBJ3ZZ", buf, sizeof buf, &required) == COOC_OK);
  CHECK(std::string(buf) == "appendix,excision");
  CHECK(cooc_concepts_for(map, "30243K1", buf, sizeof buf, &required) == COOC_OK);
  CHECK(std::string(buf) == "ngram:frozen,ngram:frozen_plasma,ngram:plasma");
  cooc_concept_map_free(map);

  auto bad = s.write("bad.tsv", "0DBJ3ZZ\tok\nxx\n");
  CHECK(cooc_concept_map_load(bad.c_str(), nullptr, 2, &map) == COOC_ERROR_PARSE);
  CHECK(std::string(cooc_last_error()).find("line 2") != std::string::npos);
  CHECK(cooc_concept_map_load(s.path("missing").c_str(), nullptr, 2, &map) == COOC_ERROR_IO);
  cooc_concept_map_free(nullptr);
}

TEST_CASE("model loading errors map to status codes") {
  Scratch s;
  cooc_model* model = nullptr;
  CHECK(cooc_model_load(s.path("missing").c_str(), &model) == COOC_ERROR_IO);
  auto empty = s.write("empty.txt", "");
  CHECK(cooc_model_load(empty.c_str(), &model) == COOC_ERROR_PARSE);
  CHECK(std::string(cooc_last_error()).find("empty model file") != std::string::npos);
  auto future = s.write("v9.txt", "cooc-model 9\n");
  CHECK(cooc_model_load(future.c_str(), &model) == COOC_ERROR_FORMAT_VERSION);
  CHECK(model == nullptr);
}

TEST_CASE("pipeline through the C API") {
  Scratch s;
  auto spec = s.write("spec.json", R"({
    "n_docs": 600, "test_docs": 150, "rng_seed": 3,
    "background": {"count": 30, "axes": ["0", "DT", "BT", "0123456789", "04", "Z", "XZ"],
                   "rate_min": 0.02, "rate_max": 0.06},
    "base_rates": {"30233K1": 0.1},
    "exclusion_cliques": [{"codes": ["0SR901Z", "0SR903Z"], "rate": 0.3}],
    "affinity_pairs": [{"anchor": "30233K1", "partner": "30233L1", "p": 0.9}],
    "scorer": {"confusion_prob": 0.6, "distractors_min": 1, "distractors_max": 4}
  })");
  cooc_synth_summary synth{};
  std::uint64_t seed = 5;
  REQUIRE(cooc_run_synth(spec.c_str(), s.dir().c_str(), &seed, 1, &synth) == COOC_OK);
  CHECK(synth.train_docs == 450);
  CHECK(synth.test_docs == 150);
  CHECK(synth.rng_seed == 5);
  CHECK(synth.clique_confusion_rate > 0.3);
  CHECK(cooc_run_synth(spec.c_str(), s.path("nope").c_str(), nullptr, 1, nullptr) == COOC_ERROR_IO);

  cooc_concept_map* map = nullptr;
  REQUIRE(cooc_concept_map_load(s.path("concepts.tsv").c_str(), nullptr, 2, &map) == COOC_OK);

  auto gen = cooc_gen_options_default();
  CHECK(gen.top_k == 200);
  cooc_instance_stats stats{};
  REQUIRE(cooc_run_gen_instances(s.path("train.tsv").c_str(), map, &gen,
                                 s.path("inst.tsv").c_str(), nullptr, &stats) == COOC_OK);
  CHECK(stats.records == 450);
  CHECK(stats.positives > 0);
  CHECK(stats.negatives_kept > 0);
  CHECK(slurp(s.path("inst.tsv")).rfind("#cooc-instances 1 ", 0) == 0);

  gen.neg_subsample_rate = 0.0;
  CHECK(cooc_run_gen_instances(s.path("train.tsv").c_str(), map, &gen, s.path("x.tsv").c_str(),
                               nullptr, &stats) == COOC_ERROR_DATA);

  auto train = cooc_train_options_default();
  CHECK(train.lambda == 1.0);
  cooc_train_summary ts{};
  REQUIRE(cooc_run_train(s.path("inst.tsv").c_str(), &train, s.path("model.txt").c_str(), &ts) ==
          COOC_OK);
  CHECK(ts.nonzero_weights > 0);

  cooc_model* model = nullptr;
  REQUIRE(cooc_model_load(s.path("model.txt").c_str(), &model) == COOC_OK);
  cooc_model_info info{};
  REQUIRE(cooc_model_get_info(model, &info) == COOC_OK);
  CHECK(info.nonzero_weights == ts.nonzero_weights);
  CHECK(info.score_features_enabled == 1);
  double p = 0;
  REQUIRE(cooc_model_predict_pair(model, map, "0SR903Z", "0SR901Z", 0.9, &p) == COOC_OK);
  CHECK(p > 0.0);
  CHECK(p < 1.0);
  CHECK(cooc_model_predict_pair(model, map, "0SR903Z", "0SR901Z", 1.5, &p) == COOC_ERROR_DATA);

  auto ro = cooc_rescore_options_default();
  CHECK(ro.depth == 3);
  ro.audit = 1;
  cooc_rescore_summary rs{};
  REQUIRE(cooc_run_rescore(s.path("test.tsv").c_str(), model, map, &ro, s.path("rs.tsv").c_str(),
                           nullptr, &rs) == COOC_OK);
  CHECK(rs.documents == 150);
  CHECK(slurp(s.path("rs.tsv")).find("\tpop=") != std::string::npos);

  auto eo = cooc_eval_options_default();
  cooc_eval_summary es{};
  REQUIRE(cooc_run_eval(s.path("rs.tsv").c_str(), s.path("test.tsv").c_str(), &eo,
                        s.path("table.txt").c_str(), s.path("records.txt").c_str(), &es) == COOC_OK);
  CHECK(es.break_even_f > 0.0);
  CHECK(es.break_even_f <= 1.0);
  CHECK(slurp(s.path("table.txt")).find("Threshold") != std::string::npos);

  auto pairs = s.write("pairs.tsv", "0SR903Z\t0SR901Z\n");
  REQUIRE(cooc_run_case_study(model, map, pairs.c_str(), s.path("train.tsv").c_str(),
                              s.path("cs.txt").c_str()) == COOC_OK);
  CHECK(slurp(s.path("cs.txt")).find("0SR903Z") != std::string::npos);

  cooc_model_free(model);
  cooc_concept_map_free(map);
}

TEST_CASE("perfect predictions evaluate to F = 1") {
  Scratch s;
  auto gold = s.write("gold.tsv", "d1\tBP07ZZZ,BP08ZZZ\t\nd2\t0SR901Z\t\n");
  auto preds = s.write("preds.tsv", "d1\tBP07ZZZ:1,BP08ZZZ:1\nd2\t0SR901Z:1\n");
  auto eo = cooc_eval_options_default();
  cooc_eval_summary es{};
  REQUIRE(cooc_run_eval(preds.c_str(), gold.c_str(), &eo, nullptr, nullptr, &es) == COOC_OK);
  CHECK(es.break_even_f == 1.0);
  CHECK(es.gold_codes == 3);
  auto unknown = s.write("unknown.tsv", "zz\tBP07ZZZ:1\n");
  CHECK(cooc_run_eval(unknown.c_str(), gold.c_str(), &eo, nullptr, nullptr, &es) == COOC_ERROR_DATA);
}

TEST_CASE("one-class training data is a data error") {
  Scratch s;
  auto inst = s.write("inst.tsv", "1\t1\ta=1\n1\t1\tb=1\n");
  auto train = cooc_train_options_default();
  CHECK(cooc_run_train(inst.c_str(), &train, s.path("m.txt").c_str(), nullptr) == COOC_ERROR_DATA);
  CHECK(std::string(cooc_last_error()).size() > 0);
}
