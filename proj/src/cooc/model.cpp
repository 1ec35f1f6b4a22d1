#include "cooc/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "cooc/error.hpp"
#include "cooc/numfmt.hpp"
#include "cooc/parallel.hpp"
#include "cooc/text.hpp"

namespace cooc {

void Dataset::add(const FeatureVector& features, bool label, double weight) {
  std::vector<std::pair<std::uint32_t, double>> entries;
  entries.reserve(features.size());
  for (const auto& [name, value] : features) entries.emplace_back(intern(name), value);
  add_row(entries, label, weight);
}

void Dataset::add_row(std::span<const std::pair<std::uint32_t, double>> entries, bool label,
                      double weight) {
  if (!(weight > 0.0) || !std::isfinite(weight))
    throw DataError("instance weight must be positive and finite");
  for (const auto& [col, value] : entries) {
    if (!std::isfinite(value)) throw DataError("non-finite feature value for '" + names_.at(col) + "'");
    if (value == 0.0) continue;
    cols_.push_back(col);
    vals_.push_back(value);
  }
  row_ptr_.push_back(cols_.size());
  labels_.push_back(label ? 1 : 0);
  weights_.push_back(weight);
}

std::uint32_t Dataset::intern(std::string_view name) {
  auto [it, inserted] =
      index_.try_emplace(std::string(name), static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.emplace_back(name);
  return it->second;
}

std::optional<std::uint32_t> Dataset::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Dataset::positives() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), 1));
}

void CoocModel::set_weight(const std::string& name, double value) {
  if (value == 0.0)
    weights_.erase(name);
  else
    weights_[name] = value;
}

double CoocModel::weight(const std::string& name) const {
  auto it = weights_.find(name);
  return it == weights_.end() ? 0.0 : it->second;
}

double CoocModel::margin(const FeatureVector& fv) const {
  double z = bias;
  for (const auto& [name, value] : fv) {
    auto it = weights_.find(name);
    if (it != weights_.end()) z += it->second * value;
  }
  return z;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

double predict(const CoocModel& model, const FeatureVector& fv) {
  return sigmoid(model.margin(fv));
}

namespace {

// -[y log p + (1-y) log(1-p)] with p = sigmoid(z).
double logistic_loss(double z, bool y) { return y ? -log_sigmoid(z) : -log_sigmoid(-z); }

double l1_norm(const CoocModel& model) {
  std::map<std::string_view, double> sorted(model.weights().begin(), model.weights().end());
  double s = 0.0;
  for (const auto& [name, w] : sorted) s += std::abs(w);
  return s;
}

constexpr std::size_t kBlock = 4096;

// Sum of v in fixed-size blocks so the order never depends on threading.
double blocked_sum(std::span<const double> v, unsigned workers) {
  std::size_t nblocks = (v.size() + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
  parallel_for(nblocks, workers, [&](std::size_t b) {
    double s = 0.0;
    std::size_t end = std::min(v.size(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) s += v[i];
    partial[b] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

// Column-major copy of a dataset, restricted to the kept columns.
struct ColumnMajor {
  std::vector<std::size_t> col_ptr;
  std::vector<std::uint32_t> rows;
  std::vector<double> vals;
};

class Solver {
 public:
  Solver(const Dataset& data, std::vector<std::uint32_t> kept, double lambda,
         const SolverOptions& opts)
      : data_(data),
        kept_(std::move(kept)),
        lambda_(lambda),
        opts_(opts),
        workers_(resolve_workers(opts.workers)) {
    const std::size_t n = data_.rows();
    const std::size_t m = kept_.size();
    remap_.assign(data_.columns(), kNotKept);
    for (std::size_t j = 0; j < m; ++j) remap_[kept_[j]] = static_cast<std::uint32_t>(j);

    // Row-major restricted copy and column-major transpose.
    row_ptr_.assign(n + 1, 0);
    std::vector<std::size_t> col_count(m, 0);
    for (std::size_t r = 0; r < n; ++r) {
      auto cols = data_.row_columns(r);
      auto vals = data_.row_values(r);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        auto j = remap_[cols[k]];
        if (j == kNotKept) continue;
        cols_.push_back(j);
        vals_.push_back(vals[k]);
        ++col_count[j];
      }
      row_ptr_[r + 1] = cols_.size();
    }
    csc_.col_ptr.assign(m + 1, 0);
    for (std::size_t j = 0; j < m; ++j) csc_.col_ptr[j + 1] = csc_.col_ptr[j] + col_count[j];
    csc_.rows.resize(cols_.size());
    csc_.vals.resize(cols_.size());
    std::vector<std::size_t> fill(csc_.col_ptr.begin(), csc_.col_ptr.end() - 1);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
        auto pos = fill[cols_[k]]++;
        csc_.rows[pos] = static_cast<std::uint32_t>(r);
        csc_.vals[pos] = vals_[k];
      }
    }

    // Separable curvature bound: the logistic loss has second derivative at
    // most 1/4 and (x.d)^2 <= nnz * sum_j x_j^2 d_j^2 (bias counted as a
    // column of ones).
    curvature_.assign(m, 0.0);
    bias_curvature_ = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      double nnz = static_cast<double>(row_ptr_[r + 1] - row_ptr_[r] + 1);
      double c = 0.25 * data_.weight(r) * nnz;
      bias_curvature_ += c;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        curvature_[cols_[k]] += c * vals_[k] * vals_[k];
    }
  }

  static constexpr std::uint32_t kNotKept = 0xffffffffu;

  // Monotone accelerated proximal gradient: the prox step is taken from an
  // extrapolated point y and accepted only if it does not raise the objective;
  // otherwise momentum is reset and the step retried from the current iterate,
  // where the majorizer at scale 1 guarantees descent.
  void run(std::vector<double>& w, double& b, ModelMetadata& meta) {
    const std::size_t n = data_.rows();
    const std::size_t m = kept_.size();
    w.assign(m, 0.0);
    b = 0.0;
    std::vector<double> z(n, 0.0), z_prev(n, 0.0), w_prev(m, 0.0);
    std::vector<double> wy(m, 0.0), zy(n, 0.0), z_new(n), residual(n), grad(m), w_new(m);
    double by = 0.0, b_prev = 0.0;
    double obj = loss(z);
    double fy = obj;
    double t = 1.0;
    double scale = 1.0;
    int iter = 0;
    bool converged = false;

    while (iter < opts_.max_iterations) {
      const double grad_b = gradient(zy, residual, grad);

      scale = std::max(scale * 0.5, 1e-12);
      double f_new = 0.0, b_new = 0.0;
      while (true) {
        b_new = by - grad_b / (scale * bias_curvature_);
        double linear = grad_b * (b_new - by);
        double quad = bias_curvature_ * (b_new - by) * (b_new - by);
        for (std::size_t j = 0; j < m; ++j) {
          if (curvature_[j] == 0.0) {  // column never observed
            w_new[j] = 0.0;
            continue;
          }
          double h = scale * curvature_[j];
          double u = wy[j] - grad[j] / h;
          double thr = lambda_ / h;
          w_new[j] = u > thr ? u - thr : (u < -thr ? u + thr : 0.0);
          double d = w_new[j] - wy[j];
          linear += grad[j] * d;
          quad += curvature_[j] * d * d;
        }
        margins(w_new, b_new, z_new);
        f_new = loss(z_new);
        if (f_new <= fy + linear + 0.5 * scale * quad || scale >= 1.0) break;
        scale = std::min(1.0, scale * 2.0);
      }
      ++iter;

      double obj_new = f_new + lambda_ * l1(w_new);
      if (!(obj_new <= obj)) {
        if (t == 1.0) {
          // Already a plain step from the iterate: only rounding gets here.
          converged = true;
          break;
        }
        t = 1.0;
        wy = w;
        by = b;
        zy = z;
        fy = loss(z);
        if (opts_.on_iteration) opts_.on_iteration(iter, obj);
        continue;
      }

      w_prev.swap(w);
      w.swap(w_new);
      b_prev = b;
      b = b_new;
      z_prev.swap(z);
      z.swap(z_new);
      double decrease = (obj - obj_new) / std::max(std::abs(obj), 1e-300);
      obj = obj_new;
      if (opts_.on_iteration) opts_.on_iteration(iter, obj);
      if (decrease < opts_.tolerance) {
        converged = true;
        break;
      }

      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      t = t_next;
      for (std::size_t j = 0; j < m; ++j) wy[j] = w[j] + beta * (w[j] - w_prev[j]);
      by = b + beta * (b - b_prev);
      // Margins are linear in the parameters, so extrapolate them directly.
      for (std::size_t r = 0; r < n; ++r) zy[r] = z[r] + beta * (z[r] - z_prev[r]);
      fy = beta == 0.0 ? f_new : loss(zy);
    }
    meta.iterations = static_cast<std::uint64_t>(iter);
    meta.objective = obj;
    meta.converged = converged;
  }

  const std::vector<std::uint32_t>& kept() const { return kept_; }

  // Gradient of the unpenalized loss at margins z; returns the bias component.
  double gradient(const std::vector<double>& z, std::vector<double>& residual,
                  std::vector<double>& grad) const {
    const std::size_t n = data_.rows();
    const std::size_t m = kept_.size();
    residual.resize(n);
    grad.resize(m);
    parallel_for(blocks(n), workers_, [&](std::size_t blk) {
      for (std::size_t r = blk * kBlock; r < std::min(n, (blk + 1) * kBlock); ++r)
        residual[r] = data_.weight(r) * (sigmoid(z[r]) - (data_.label(r) ? 1.0 : 0.0));
    });
    parallel_for(blocks(m), workers_, [&](std::size_t blk) {
      for (std::size_t j = blk * kBlock; j < std::min(m, (blk + 1) * kBlock); ++j) {
        double g = 0.0;
        for (std::size_t k = csc_.col_ptr[j]; k < csc_.col_ptr[j + 1]; ++k)
          g += residual[csc_.rows[k]] * csc_.vals[k];
        grad[j] = g;
      }
    });
    return blocked_sum(residual, workers_);
  }

  void margins(const std::vector<double>& w, double b, std::vector<double>& z) const {
    const std::size_t n = data_.rows();
    parallel_for(blocks(n), workers_, [&](std::size_t blk) {
      for (std::size_t r = blk * kBlock; r < std::min(n, (blk + 1) * kBlock); ++r) {
        double s = b;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s += w[cols_[k]] * vals_[k];
        z[r] = s;
      }
    });
  }

 private:
  static std::size_t blocks(std::size_t n) { return (n + kBlock - 1) / kBlock; }

  double loss(const std::vector<double>& z) const {
    std::vector<double> per_row(z.size());
    parallel_for(blocks(z.size()), workers_, [&](std::size_t blk) {
      for (std::size_t r = blk * kBlock; r < std::min(z.size(), (blk + 1) * kBlock); ++r)
        per_row[r] = data_.weight(r) * logistic_loss(z[r], data_.label(r));
    });
    return blocked_sum(per_row, workers_);
  }

  static double l1(const std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += std::abs(v);
    return s;
  }

  const Dataset& data_;
  std::vector<std::uint32_t> kept_;
  double lambda_;
  const SolverOptions& opts_;
  unsigned workers_;
  std::vector<std::uint32_t> remap_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> vals_;
  ColumnMajor csc_;
  std::vector<double> curvature_;
  double bias_curvature_ = 0.0;
};

}  // namespace

double objective(const CoocModel& model, std::span<const TrainingInstance> instances) {
  double s = 0.0;
  for (const auto& inst : instances)
    s += inst.weight * logistic_loss(model.margin(inst.features), inst.label);
  return s + model.lambda * l1_norm(model);
}

double objective(const CoocModel& model, const Dataset& data) {
  std::vector<double> col_weight(data.columns(), 0.0);
  for (std::uint32_t j = 0; j < data.columns(); ++j) col_weight[j] = model.weight(data.name(j));
  double s = 0.0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    double z = model.bias;
    auto cols = data.row_columns(r);
    auto vals = data.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) z += col_weight[cols[k]] * vals[k];
    s += data.weight(r) * logistic_loss(z, data.label(r));
  }
  return s + model.lambda * l1_norm(model);
}

CoocModel train(const Dataset& data, double lambda, const SolverOptions& opts) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw DataError("lambda must be a finite value >= 0");
  if (opts.max_iterations < 0) throw DataError("max_iterations must be >= 0");
  const std::size_t pos = data.positives();
  if (pos == 0 || pos == data.rows())
    throw DataError("training data must contain both positive and negative instances");

  std::vector<std::uint32_t> kept;
  if (opts.min_feature_count > 1) {
    std::vector<std::size_t> count(data.columns(), 0);
    for (std::size_t r = 0; r < data.rows(); ++r)
      for (auto c : data.row_columns(r)) ++count[c];
    for (std::uint32_t j = 0; j < data.columns(); ++j)
      if (count[j] >= opts.min_feature_count) kept.push_back(j);
  } else {
    kept.resize(data.columns());
    std::iota(kept.begin(), kept.end(), 0u);
  }

  CoocModel model;
  model.lambda = lambda;
  model.meta.instances = data.rows();
  model.meta.positives = pos;
  model.meta.negatives = data.rows() - pos;

  Solver solver(data, std::move(kept), lambda, opts);
  std::vector<double> w;
  solver.run(w, model.bias, model.meta);
  for (std::size_t j = 0; j < w.size(); ++j)
    if (w[j] != 0.0) model.set_weight(data.name(solver.kept()[j]), w[j]);
  return model;
}

NllGradient nll_gradient(const CoocModel& model, const Dataset& data, int workers) {
  std::vector<std::uint32_t> all(data.columns());
  std::iota(all.begin(), all.end(), 0u);
  SolverOptions opts;
  opts.workers = workers;
  Solver solver(data, std::move(all), 0.0, opts);
  std::vector<double> w(data.columns());
  for (std::uint32_t j = 0; j < data.columns(); ++j) w[j] = model.weight(data.name(j));
  std::vector<double> z(data.rows()), residual;
  solver.margins(w, model.bias, z);
  NllGradient g;
  g.bias = solver.gradient(z, residual, g.weights);
  return g;
}

CoocModel train(std::span<const TrainingInstance> instances, double lambda,
                const SolverOptions& opts) {
  Dataset data;
  for (const auto& inst : instances) data.add(inst);
  return train(data, lambda, opts);
}

void save_model(const CoocModel& model, std::ostream& out) {
  std::string buf;
  auto line = [&](std::string_view key, const std::string& value) {
    buf.append(key).append(" ").append(value).append("\n");
  };
  line("cooc-model", std::to_string(kModelFormatVersion));
  line("lambda", format_double(model.lambda));
  line("bias", format_double(model.bias));
  const auto& sc = model.score_cfg;
  line("score.enabled", sc.enabled ? "1" : "0");
  line("score.raw", sc.include_raw_score ? "1" : "0");
  line("score.raw_log_odds", sc.raw_log_odds ? "1" : "0");
  std::string thresholds;
  for (std::size_t i = 0; i < sc.thresholds.size(); ++i) {
    if (i) thresholds += ',';
    thresholds += format_double(sc.thresholds[i]);
  }
  line("score.thresholds", thresholds.empty() ? "-" : thresholds);
  const auto& m = model.meta;
  line("meta.instances", std::to_string(m.instances));
  line("meta.positives", std::to_string(m.positives));
  line("meta.negatives", std::to_string(m.negatives));
  line("meta.seed", std::to_string(m.seed));
  line("meta.iterations", std::to_string(m.iterations));
  line("meta.objective", format_double(m.objective));
  line("meta.converged", m.converged ? "1" : "0");

  std::map<std::string_view, double> sorted(model.weights().begin(), model.weights().end());
  line("weights", std::to_string(sorted.size()));
  for (const auto& [name, w] : sorted) {
    append_double(buf, w);
    buf.append("\t").append(name).append("\n");
  }
  buf.append("end\n");
  out << buf;
  if (!out) throw IoError("failed writing model");
}

void save_model(const CoocModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  save_model(model, out);
}

CoocModel load_model(std::istream& in) {
  std::string raw;
  std::size_t lineno = 0;
  auto next = [&]() -> std::string_view {
    if (!std::getline(in, raw)) throw ParseError("truncated model file", lineno + 1);
    ++lineno;
    return chomp(raw);
  };
  auto record = [&](std::string_view key) -> std::string {
    auto l = next();
    auto sp = l.find(' ');
    if (sp == std::string_view::npos || l.substr(0, sp) != key)
      throw ParseError("expected '" + std::string(key) + "' record", lineno);
    return std::string(l.substr(sp + 1));
  };
  auto flag = [&](std::string_view key) {
    auto v = record(key);
    if (v != "0" && v != "1") throw ParseError("expected 0 or 1 for " + std::string(key), lineno);
    return v == "1";
  };

  if (!std::getline(in, raw)) throw ParseError("empty model file");
  ++lineno;
  {
    auto l = chomp(raw);
    if (l.substr(0, 11) != "cooc-model ") throw ParseError("not a cooc model file", lineno);
    auto version = std::string(l.substr(11));
    if (version != std::to_string(kModelFormatVersion))
      throw FormatVersionError("unsupported model format version '" + version + "' (expected " +
                               std::to_string(kModelFormatVersion) + ")");
  }

  CoocModel model;
  model.lambda = parse_double(record("lambda"), lineno);
  model.bias = parse_double(record("bias"), lineno);
  model.score_cfg.enabled = flag("score.enabled");
  model.score_cfg.include_raw_score = flag("score.raw");
  model.score_cfg.raw_log_odds = flag("score.raw_log_odds");
  model.score_cfg.thresholds.clear();
  if (auto t = record("score.thresholds"); t != "-")
    for (auto part : split(t, ',')) model.score_cfg.thresholds.push_back(parse_double(part, lineno));
  model.score_cfg.validate();
  model.meta.instances = parse_int<std::uint64_t>(record("meta.instances"), lineno);
  model.meta.positives = parse_int<std::uint64_t>(record("meta.positives"), lineno);
  model.meta.negatives = parse_int<std::uint64_t>(record("meta.negatives"), lineno);
  model.meta.seed = parse_int<std::uint64_t>(record("meta.seed"), lineno);
  model.meta.iterations = parse_int<std::uint64_t>(record("meta.iterations"), lineno);
  model.meta.objective = parse_double(record("meta.objective"), lineno);
  model.meta.converged = flag("meta.converged");

  auto count = parse_int<std::size_t>(record("weights"), lineno);
  for (std::size_t i = 0; i < count; ++i) {
    auto l = next();
    auto tab = l.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected <weight><TAB><name>", lineno);
    double w = parse_double(l.substr(0, tab), lineno);
    if (w == 0.0 || !std::isfinite(w)) throw ParseError("stored weights must be nonzero and finite", lineno);
    model.set_weight(std::string(l.substr(tab + 1)), w);
  }
  if (next() != "end") throw ParseError("missing 'end' marker", lineno);
  return model;
}

CoocModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace cooc
