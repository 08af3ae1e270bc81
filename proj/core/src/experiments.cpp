#include "lcat/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "lcat/ansatz.hpp"
#include "lcat/error.hpp"
#include "lcat/learned_synthetic.hpp"
#include "lcat/stats.hpp"
#include "lcat/transforms.hpp"

namespace lcat {

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  const auto worker = [&] {
    while (!failed.load()) {
      const std::size_t k = next.fetch_add(1);
      if (k >= count) return;
      try {
        task(k);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
        failed = true;
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  }
  if (first) std::rethrow_exception(first);
}

std::vector<std::pair<std::string, std::string>> significance_pairs() {
  return {{"CAT", "GAT"}, {"CATv2", "GATv2"}, {"LCAT", "GAT"}, {"LCATv2", "GATv2"}};
}

namespace {

using Clock = std::chrono::steady_clock;

CsbmParams at_grid_point(const CsbmParams& base, const std::string& name, double v) {
  CsbmParams p = base;
  if (name == "q") p.q = v;
  else if (name == "p") p.p = v;
  else if (name == "mu_norm") p.mu_norm = v;
  else if (name == "sigma") p.sigma = v;
  else throw ConfigError("unknown synthetic grid parameter '" + name + "'");
  return p;
}

ResultRow base_row(const ExperimentConfig& c, std::string model, double grid_value, std::size_t run,
                   std::optional<std::uint64_t> seed) {
  ResultRow r;
  r.experiment = c.id;
  r.model = std::move(model);
  r.grid_name = c.grid.name;
  r.grid_value = grid_value;
  r.seed = seed;
  r.run = run;
  return r;
}

ResultRow metric_row(ResultRow r, std::string metric, std::optional<double> value) {
  r.metric = std::move(metric);
  r.value = value;
  return r;
}

std::optional<double> seconds_since(const ExperimentConfig& c, Clock::time_point start) {
  if (!c.record_time) return std::nullopt;
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void append_threshold_rows(const ExperimentConfig& c, std::vector<ResultRow>& rows) {
  for (double v : c.grid.values) {
    const auto th = separability_thresholds(at_grid_point(c.csbm, c.grid.name, v));
    ResultRow r = base_row(c, "", v, 0, std::nullopt);
    rows.push_back(metric_row(r, "threshold_gat", th.gat));
    rows.push_back(metric_row(r, "threshold_cat", th.cat));
  }
}

template <typename Item>
std::vector<ResultRow> collect(std::size_t count, std::size_t jobs, Item&& item) {
  std::vector<std::vector<ResultRow>> parts(count);
  parallel_for(count, jobs, [&](std::size_t k) { parts[k] = item(k); });
  std::vector<ResultRow> rows;
  for (auto& p : parts)
    for (auto& r : p) rows.push_back(std::move(r));
  return rows;
}

}  // namespace

std::vector<ResultRow> run_synthetic_sweep(const ExperimentConfig& c) {
  if (c.kind != ExperimentKind::kSyntheticFixed) throw ConfigError("run_synthetic_sweep needs a synthetic-fixed config");
  c.validate();
  const std::size_t points = c.grid.values.size();
  auto rows = collect(points * c.runs, c.jobs, [&](std::size_t item) {
    const std::size_t g = item / c.runs;
    const std::size_t run = item % c.runs;
    CsbmParams params = at_grid_point(c.csbm, c.grid.name, c.grid.values[g]);
    params.seed = derive_seed(c.seed, "synthetic", g, run);
    const CsbmSample sample = sample_csbm(params);
    std::vector<ResultRow> out;
    for (const auto& m : c.models) {
      const EstimatorKind kind = parse_estimator_kind(m);
      if (kind == EstimatorKind::kCAT && params.p == params.q) continue;
      const auto t0 = Clock::now();
      const auto res = estimate_and_classify(sample, EstimatorMode::defaults(kind, params.p, params.q), 0.0,
                                             EstimateOptions{true});
      ResultRow r = base_row(c, m, c.grid.values[g], run, params.seed);
      r.seconds = seconds_since(c, t0);
      out.push_back(metric_row(r, "accuracy", res.accuracy));
      for (int k = 0; k < 3; ++k)
        out.push_back(metric_row(r, "gamma_mean_group" + std::to_string(k), res.gamma_groups->mean[k]));
    }
    return out;
  });
  append_threshold_rows(c, rows);
  sort_rows(rows);
  return rows;
}

std::vector<ResultRow> run_learned_synthetic(const ExperimentConfig& c) {
  if (c.kind != ExperimentKind::kSyntheticLearned)
    throw ConfigError("run_learned_synthetic needs a synthetic-learned config");
  c.validate();
  const std::size_t points = c.grid.values.size();
  auto rows = collect(points * c.runs, c.jobs, [&](std::size_t item) {
    const std::size_t g = item / c.runs;
    const std::size_t run = item % c.runs;
    CsbmParams params = at_grid_point(c.csbm, c.grid.name, c.grid.values[g]);
    params.seed = derive_seed(c.seed, "synthetic", g, run);
    const CsbmSample sample = sample_csbm(params);
    std::vector<ResultRow> out;
    for (const auto& m : c.models) {
      const LearnedModelKind kind = parse_learned_model_kind(m);
      const auto t0 = Clock::now();
      const auto res = train_learned_synthetic(kind, sample, c.learned);
      ResultRow r = base_row(c, m, c.grid.values[g], run, params.seed);
      r.seconds = seconds_since(c, t0);
      if (kind == LearnedModelKind::kLCAT) {
        r.lambda1_by_layer = {res.lambda1};
        r.lambda2_by_layer = {res.lambda2};
      }
      out.push_back(metric_row(r, "accuracy", res.accuracy));
      out.push_back(metric_row(r, "C", res.C));
      if (kind == LearnedModelKind::kLCAT) {
        out.push_back(metric_row(r, "lambda1", res.lambda1));
        out.push_back(metric_row(r, "lambda2", res.lambda2));
      }
    }
    return out;
  });
  append_threshold_rows(c, rows);
  sort_rows(rows);
  return rows;
}

namespace {

struct RunOutcome {
  std::optional<double> test;
  std::optional<double> val;
  std::size_t best_epoch = 0;
  std::vector<std::pair<double, double>> lambdas;
};

RunOutcome train_one(const ExperimentConfig& c, const LabelledDataset& data, LayerKind kind, const Initializer& init,
                     std::uint64_t seed) {
  ModelSpec spec = c.model;
  spec.kind = kind;
  spec.layer_kinds.clear();
  spec.in_dim = data.features.cols();
  spec.out_dim = data.num_classes == 2 ? 1 : static_cast<std::size_t>(data.num_classes);
  Rng rng(seed);
  auto model = build_model(spec, init, rng);
  TrainConfig tc = c.train;
  tc.seed = seed;
  const TrainLog log = train(*model, data, tc);
  if (log.entries() == 0) throw RuntimeFailure("training aborted before the first epoch: " + log.abort_reason);
  return {log.test_at_best, log.best_val_metric, log.best_epoch, model->lambdas()};
}

std::vector<ResultRow> outcome_rows(const ExperimentConfig& c, const std::string& model, const std::string& grid_name,
                                    double grid_value, std::size_t run, std::uint64_t seed, const RunOutcome& o,
                                    std::optional<double> seconds) {
  ResultRow r;
  r.experiment = c.id;
  r.model = model;
  r.grid_name = grid_name;
  r.grid_value = grid_value;
  r.seed = seed;
  r.run = run;
  r.seconds = seconds;
  if (has_learnable_lambdas(parse_layer_kind(model)))
    for (const auto& [l1, l2] : o.lambdas) {
      r.lambda1_by_layer.push_back(l1);
      r.lambda2_by_layer.push_back(l2);
    }
  const std::string metric(to_string(c.train.metric));
  return {metric_row(r, "test_" + metric, o.test), metric_row(r, "val_" + metric, o.val),
          metric_row(r, "best_epoch", static_cast<double>(o.best_epoch))};
}

std::uint64_t model_seed(const ExperimentConfig& c, const std::string& model, std::size_t run) {
  return derive_seed(c.seed, model, 0, run);
}

}  // namespace

std::vector<ResultRow> run_node_classification(const ExperimentConfig& c) {
  if (c.kind != ExperimentKind::kNodeClassification)
    throw ConfigError("run_node_classification needs a node-classification config");
  c.validate();
  const LabelledDataset data = load_dataset(c.dataset);
  const std::size_t nm = c.models.size();
  std::vector<std::optional<double>> test(nm * c.runs);
  auto rows = collect(nm * c.runs, c.jobs, [&](std::size_t item) {
    const std::size_t m = item / c.runs;
    const std::size_t run = item % c.runs;
    const std::uint64_t seed = model_seed(c, c.models[m], run);
    const auto t0 = Clock::now();
    const RunOutcome o = train_one(c, data, parse_layer_kind(c.models[m]), c.init, seed);
    test[item] = o.test;
    return outcome_rows(c, c.models[m], c.grid.name, c.grid.values[0], run, seed, o, seconds_since(c, t0));
  });

  const std::string metric(to_string(c.train.metric));
  std::map<std::string, std::vector<double>> by_model;
  std::map<std::string, bool> complete;
  for (std::size_t m = 0; m < nm; ++m) {
    auto& v = by_model[c.models[m]];
    complete[c.models[m]] = true;
    for (std::size_t run = 0; run < c.runs; ++run) {
      if (const auto& t = test[m * c.runs + run]) v.push_back(*t);
      else complete[c.models[m]] = false;
    }
    ResultRow r = base_row(c, c.models[m], c.grid.values[0], 0, std::nullopt);
    std::optional<double> mean, sd;
    if (!v.empty()) {
      double s = 0.0;
      for (double x : v) s += x;
      mean = s / static_cast<double>(v.size());
    }
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - *mean) * (x - *mean);
      sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    rows.push_back(metric_row(r, "mean_test_" + metric, mean));
    rows.push_back(metric_row(r, "std_test_" + metric, sd));
  }
  for (const auto& [model, baseline] : significance_pairs()) {
    if (!by_model.contains(model) || !by_model.contains(baseline)) continue;
    ResultRow r = base_row(c, model, c.grid.values[0], 0, std::nullopt);
    std::optional<double> t, p, sig;
    if (c.runs >= 2 && complete[model] && complete[baseline]) {
      const auto res = paired_t_test(by_model[model], by_model[baseline], 0.05);
      t = res.t;
      p = res.p;
      sig = res.significant ? 1.0 : 0.0;
    }
    rows.push_back(metric_row(r, "t_vs_" + baseline, t));
    rows.push_back(metric_row(r, "p_vs_" + baseline, p));
    rows.push_back(metric_row(r, "significant_vs_" + baseline, sig));
  }
  sort_rows(rows);
  return rows;
}

std::vector<ResultRow> run_robustness(const ExperimentConfig& c) {
  if (c.kind != ExperimentKind::kNoiseFeature && c.kind != ExperimentKind::kNoiseEdge && c.kind != ExperimentKind::kInit)
    throw ConfigError("run_robustness needs a noise-feature, noise-edge or init config");
  c.validate();
  const LabelledDataset data = load_dataset(c.dataset);
  const std::vector<Initializer> inits = robustness_initializers();
  const std::size_t levels = c.kind == ExperimentKind::kInit ? inits.size() : c.grid.values.size();
  const std::size_t nm = c.models.size();
  auto rows = collect(levels * nm * c.runs, c.jobs, [&](std::size_t item) {
    const std::size_t level = item / (nm * c.runs);
    const std::size_t m = (item / c.runs) % nm;
    const std::size_t run = item % c.runs;
    const std::uint64_t seed = model_seed(c, c.models[m], run);
    const auto t0 = Clock::now();
    Initializer init = c.init;
    std::string grid_name = c.grid.name;
    double grid_value = 0.0;
    RunOutcome o;
    if (c.kind == ExperimentKind::kInit) {
      init = inits[level];
      grid_name = init.kind == Initializer::Kind::kGlorotUniform ? "init_glorot_uniform" : "init_glorot_normal";
      grid_value = init.gain;
      o = train_one(c, data, parse_layer_kind(c.models[m]), init, seed);
    } else {
      grid_value = c.grid.values[level];
      LabelledDataset noisy = data;
      Rng noise(derive_seed(c.seed, to_string(c.kind), level, run));
      if (c.kind == ExperimentKind::kNoiseFeature) noisy.features = inject_feature_noise(data.features, grid_value, noise);
      else noisy.graph = inject_edge_noise(data.graph, grid_value, noise);
      o = train_one(c, noisy, parse_layer_kind(c.models[m]), init, seed);
    }
    return outcome_rows(c, c.models[m], grid_name, grid_value, run, seed, o, seconds_since(c, t0));
  });
  sort_rows(rows);
  return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::kSyntheticFixed: return run_synthetic_sweep(c);
    case ExperimentKind::kSyntheticLearned: return run_learned_synthetic(c);
    case ExperimentKind::kNodeClassification: return run_node_classification(c);
    case ExperimentKind::kNoiseFeature:
    case ExperimentKind::kNoiseEdge:
    case ExperimentKind::kInit: return run_robustness(c);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace lcat
