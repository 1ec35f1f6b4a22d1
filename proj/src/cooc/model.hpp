#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cooc/features.hpp"

namespace cooc {

struct TrainingInstance {
  FeatureVector features;
  bool label = false;
  // Strictly positive; negatives kept at subsampling rate r carry 1/r.
  double weight = 1.0;
};

// Training instances with feature names interned to dense column ids, stored
// row-major. This is what the solver consumes.
class Dataset {
 public:
  // Throws DataError for a non-positive or non-finite weight.
  void add(const FeatureVector& features, bool label, double weight = 1.0);
  void add(const TrainingInstance& instance) {
    add(instance.features, instance.label, instance.weight);
  }
  // Adds a row whose features are already interned (ids from intern()).
  void add_row(std::span<const std::pair<std::uint32_t, double>> entries, bool label,
               double weight);
  std::uint32_t intern(std::string_view name);

  std::size_t rows() const { return labels_.size(); }
  std::size_t columns() const { return names_.size(); }
  std::size_t nonzeros() const { return cols_.size(); }
  const std::string& name(std::uint32_t column) const { return names_[column]; }
  std::optional<std::uint32_t> find(std::string_view name) const;

  std::span<const std::uint32_t> row_columns(std::size_t r) const {
    return {cols_.data() + row_ptr_[r], cols_.data() + row_ptr_[r + 1]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {vals_.data() + row_ptr_[r], vals_.data() + row_ptr_[r + 1]};
  }
  bool label(std::size_t r) const { return labels_[r] != 0; }
  double weight(std::size_t r) const { return weights_[r]; }

  std::size_t positives() const;

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> names_;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> cols_;
  std::vector<double> vals_;
  std::vector<std::uint8_t> labels_;
  std::vector<double> weights_;
};

struct ModelMetadata {
  std::uint64_t instances = 0;
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  std::uint64_t seed = 0;
  std::uint64_t iterations = 0;
  double objective = 0.0;
  bool converged = false;
};

// Binary l1-regularized logistic regression over named sparse features.
class CoocModel {
 public:
  CoocModel() = default;

  // Sets a weight; zero removes it.
  void set_weight(const std::string& name, double value);
  double weight(const std::string& name) const;
  const std::unordered_map<std::string, double>& weights() const { return weights_; }
  std::size_t nonzero_count() const { return weights_.size(); }

  double bias = 0.0;
  double lambda = 0.0;
  ScoreFeatureConfig score_cfg;
  ModelMetadata meta;

  // bias + sum of weight * value; unknown features contribute nothing.
  double margin(const FeatureVector& fv) const;

 private:
  std::unordered_map<std::string, double> weights_;
};

// Logistic function and its log, both numerically stable.
double sigmoid(double z);
double log_sigmoid(double z);

// P(label | fv) = sigmoid(margin).
double predict(const CoocModel& model, const FeatureVector& fv);

// Weighted negative log-likelihood plus lambda * l1 norm of the weights (the
// bias is not penalized).
double objective(const CoocModel& model, std::span<const TrainingInstance> instances);
double objective(const CoocModel& model, const Dataset& data);

struct NllGradient {
  std::vector<double> weights;  // one entry per dataset column
  double bias = 0.0;
};

// Gradient of the weighted negative log-likelihood (no penalty) at the model's
// parameters, computed by the solver's own routine.
NllGradient nll_gradient(const CoocModel& model, const Dataset& data, int workers = 1);

struct SolverOptions {
  int max_iterations = 500;
  // Stop once the relative objective decrease falls below this.
  double tolerance = 1e-7;
  // Features seen in fewer rows are dropped before training (0 keeps all).
  std::size_t min_feature_count = 0;
  // 0 means all available cores. Results do not depend on this.
  int workers = 0;
  // Called after every accepted iteration with (iteration, objective).
  std::function<void(int, double)> on_iteration;
};

// Proximal gradient with a diagonal majorizer and backtracking on its scale.
// Each accepted step is non-increasing in the objective. Throws DataError when
// the data hold a single class or lambda is negative.
CoocModel train(const Dataset& data, double lambda, const SolverOptions& opts = {});
CoocModel train(std::span<const TrainingInstance> instances, double lambda,
                const SolverOptions& opts = {});

inline constexpr int kModelFormatVersion = 1;

// Text container, one record per line:
//   cooc-model <version>
//   lambda <x> / bias <x> / score.* and meta.* records
//   weights <n>
//   <weight><TAB><feature name>   (n lines, sorted by name)
//   end
// Numbers use the shortest round-trip decimal form, so load(save(m)) restores
// bit-identical weights.
void save_model(const CoocModel& model, std::ostream& out);
void save_model(const CoocModel& model, const std::string& path);
CoocModel load_model(std::istream& in);
CoocModel load_model(const std::string& path);

}  // namespace cooc
