#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcat/csbm.hpp"
#include "lcat/error.hpp"
#include "lcat/experiments.hpp"
#include "lcat/results.hpp"

namespace {

struct SharedFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::string out;
  std::string format;
  std::optional<std::size_t> jobs;
};

void add_shared(CLI::App* cmd, SharedFlags& f) {
  cmd->add_option("--config", f.config, "Experiment config (.toml or .json)");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--runs", f.runs, "Seeds per grid point");
  cmd->add_option("--out", f.out, "Output file (stdout when omitted)");
  cmd->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--jobs", f.jobs, "Worker threads");
}

lcat::ExperimentConfig resolve(const SharedFlags& f, std::optional<lcat::ExperimentKind> kind) {
  lcat::ExperimentConfig c;
  if (!f.config.empty()) {
    c = lcat::read_experiment_config(f.config, kind);
  } else {
    if (!kind) throw lcat::ConfigError("no experiment kind given; pass --config or --kind");
    c = lcat::default_experiment_config(*kind);
  }
  if (f.seed) c.seed = *f.seed;
  if (f.runs) c.runs = *f.runs;
  if (!f.out.empty()) c.out = f.out;
  if (!f.format.empty()) c.format = lcat::parse_output_format(f.format);
  if (f.jobs) c.jobs = *f.jobs;
  return c;
}

void write_text(const std::string& text, const std::filesystem::path& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw lcat::RuntimeFailure("cannot open " + out.string() + " for writing");
  f << text;
  if (!f) throw lcat::RuntimeFailure("failed writing " + out.string());
}

void run_and_emit(lcat::ExperimentConfig c) {
  c.validate();
  const auto rows = lcat::run_experiment(c);
  if (c.out.empty())
    std::cout << (c.format == lcat::OutputFormat::kCsv ? lcat::rows_to_csv(rows) : lcat::rows_to_json(rows));
  else
    lcat::emit_results(rows, c.out, c.format);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convolutional and learnable graph attention experiments"};
  app.require_subcommand(1);

  SharedFlags sweep_f, learned_f, train_f, robust_f, thr_f;
  auto* sweep = app.add_subcommand("synthetic-sweep", "Fixed-ansatz estimators over a CSBM grid");
  add_shared(sweep, sweep_f);
  auto* learned = app.add_subcommand("synthetic-learned", "Learn C, lambda1, lambda2 of the ansatz estimators");
  add_shared(learned, learned_f);
  auto* trainc = app.add_subcommand("train", "Node classification over seeds with significance tests");
  add_shared(trainc, train_f);
  std::string dataset;
  trainc->add_option("--dataset", dataset, "Dataset manifest (overrides the config)");
  auto* robust = app.add_subcommand("robustness", "Feature-noise, edge-noise or initialization study");
  add_shared(robust, robust_f);
  std::string robust_kind;
  std::string robust_dataset;
  robust->add_option("--kind", robust_kind, "noise-feature, noise-edge or init")
      ->check(CLI::IsMember({"noise-feature", "noise-edge", "init"}));
  robust->add_option("--dataset", robust_dataset, "Dataset manifest (overrides the config)");
  auto* thr = app.add_subcommand("thresholds", "Print the GAT and CAT separability thresholds");
  add_shared(thr, thr_f);
  std::optional<std::size_t> n;
  std::optional<double> p, q, sigma;
  thr->add_option("--n", n, "Node count");
  thr->add_option("--p", p, "Intra-class edge probability");
  thr->add_option("--q", q, "Inter-class edge probability");
  thr->add_option("--sigma", sigma, "Feature noise standard deviation");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sweep->parsed()) {
      run_and_emit(resolve(sweep_f, lcat::ExperimentKind::kSyntheticFixed));
    } else if (learned->parsed()) {
      run_and_emit(resolve(learned_f, lcat::ExperimentKind::kSyntheticLearned));
    } else if (trainc->parsed()) {
      auto c = resolve(train_f, lcat::ExperimentKind::kNodeClassification);
      if (!dataset.empty()) c.dataset = dataset;
      run_and_emit(std::move(c));
    } else if (robust->parsed()) {
      std::optional<lcat::ExperimentKind> kind;
      if (!robust_kind.empty()) kind = lcat::parse_experiment_kind(robust_kind);
      if (!kind && robust_f.config.empty()) throw lcat::ConfigError("robustness needs --kind or --config");
      auto c = resolve(robust_f, kind);
      if (c.kind != lcat::ExperimentKind::kNoiseFeature && c.kind != lcat::ExperimentKind::kNoiseEdge &&
          c.kind != lcat::ExperimentKind::kInit)
        throw lcat::ConfigError("robustness config must be noise-feature, noise-edge or init");
      if (!robust_dataset.empty()) c.dataset = robust_dataset;
      run_and_emit(std::move(c));
    } else if (thr->parsed()) {
      auto c = resolve(thr_f, lcat::ExperimentKind::kSyntheticFixed);
      if (n) c.csbm.n = *n;
      if (p) c.csbm.p = *p;
      if (q) c.csbm.q = *q;
      if (sigma) c.csbm.sigma = *sigma;
      try {
        c.csbm.validate();
      } catch (const lcat::DomainError& e) {
        throw lcat::ConfigError(e.what());
      }
      const auto t = lcat::separability_thresholds(c.csbm);
      std::string text;
      if (c.format == lcat::OutputFormat::kJson) {
        const auto num = [](double v) {
          return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(lcat::format_number(v));
        };
        nlohmann::ordered_json j{{"n", c.csbm.n}, {"p", c.csbm.p}, {"q", c.csbm.q}, {"sigma", c.csbm.sigma},
                                 {"threshold_gat", num(t.gat)}, {"threshold_cat", num(t.cat)}};
        text = j.dump(2) + "\n";
      } else {
        text = "threshold_gat " + lcat::format_number(t.gat) + "\nthreshold_cat " + lcat::format_number(t.cat) + "\n";
      }
      write_text(text, c.out);
    }
  } catch (const lcat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
