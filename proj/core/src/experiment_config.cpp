#include "lcat/experiment_config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lcat/error.hpp"
#include "toml_lite.hpp"

namespace lcat {

using nlohmann::json;

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kSyntheticFixed: return "synthetic-fixed";
    case ExperimentKind::kSyntheticLearned: return "synthetic-learned";
    case ExperimentKind::kNodeClassification: return "node-classification";
    case ExperimentKind::kNoiseFeature: return "noise-feature";
    case ExperimentKind::kNoiseEdge: return "noise-edge";
    case ExperimentKind::kInit: return "init";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::kSyntheticFixed, ExperimentKind::kSyntheticLearned, ExperimentKind::kNodeClassification,
                 ExperimentKind::kNoiseFeature, ExperimentKind::kNoiseEdge, ExperimentKind::kInit})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

OutputFormat parse_output_format(std::string_view s) {
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "json") return OutputFormat::kJson;
  throw ConfigError("unknown output format '" + std::string(s) + "' (expected csv or json)");
}

GridSpec GridSpec::linspace(std::string name, double min, double max, std::size_t steps) {
  if (steps == 0) throw ConfigError("grid '" + name + "' needs at least one step");
  GridSpec g{std::move(name), {}};
  for (std::size_t k = 0; k < steps; ++k)
    g.values.push_back(steps == 1 ? min : min + (max - min) * static_cast<double>(k) / static_cast<double>(steps - 1));
  return g;
}

std::vector<double> feature_noise_levels() { return {0.0, 0.25, 0.5, 0.75, 1.0}; }
std::vector<double> edge_noise_levels() { return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}; }
std::vector<Initializer> robustness_initializers() {
  return {Initializer::glorot_uniform(1.0), Initializer::glorot_normal(std::sqrt(2.0))};
}

namespace {

bool is_synthetic(ExperimentKind k) {
  return k == ExperimentKind::kSyntheticFixed || k == ExperimentKind::kSyntheticLearned;
}

constexpr double kMuGridMin = 0.005;
constexpr std::size_t kMuGridSteps = 20;

}  // namespace

ExperimentConfig default_experiment_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.id = std::string(to_string(kind));
  c.csbm.mu_norm = easy_regime_mu_norm(c.csbm.n, c.csbm.sigma);
  switch (kind) {
    case ExperimentKind::kSyntheticFixed:
      c.models = {"GCN", "GAT", "CAT"};
      c.grid = GridSpec::linspace("q", 0.0, 0.5, 11);
      c.runs = 50;
      break;
    case ExperimentKind::kSyntheticLearned:
      c.models = {"GCN", "GAT", "CAT", "LCAT"};
      c.grid = GridSpec::linspace("q", 0.0, 0.5, 11);
      c.runs = 50;
      break;
    case ExperimentKind::kNodeClassification:
      c.models = {"GCN", "GAT", "GATv2", "CAT", "CATv2", "LCAT", "LCATv2"};
      c.grid = {"none", {0.0}};
      c.runs = 10;
      break;
    case ExperimentKind::kNoiseFeature:
      c.models = {"GAT", "CAT", "LCAT"};
      c.grid = {"feature_sigma", feature_noise_levels()};
      c.runs = 10;
      break;
    case ExperimentKind::kNoiseEdge:
      c.models = {"GAT", "CAT", "LCAT"};
      c.grid = {"edge_p", edge_noise_levels()};
      c.runs = 10;
      break;
    case ExperimentKind::kInit:
      c.models = {"GCN", "GAT", "CAT", "LCAT"};
      c.grid = {"init", {0.0, 1.0}};
      c.runs = 10;
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (runs == 0) throw ConfigError("runs must be >= 1");
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
  if (models.empty()) throw ConfigError("models list is empty");
  if (grid.values.empty()) throw ConfigError("grid '" + grid.name + "' is empty");
  std::set<std::string> seen;
  for (const auto& m : models) {
    if (!seen.insert(m).second) throw ConfigError("model '" + m + "' listed twice");
    switch (kind) {
      case ExperimentKind::kSyntheticFixed: parse_estimator_kind(m); break;
      case ExperimentKind::kSyntheticLearned: parse_learned_model_kind(m); break;
      default: parse_layer_kind(m); break;
    }
  }
  if (is_synthetic(kind)) {
    static const std::set<std::string> names{"q", "mu_norm", "p", "sigma"};
    if (!names.contains(grid.name))
      throw ConfigError("synthetic grid parameter must be q, mu_norm, p or sigma, got '" + grid.name + "'");
    for (double v : grid.values) {
      CsbmParams p = csbm;
      if (grid.name == "q") p.q = v;
      if (grid.name == "p") p.p = v;
      if (grid.name == "mu_norm") p.mu_norm = v;
      if (grid.name == "sigma") p.sigma = v;
      try {
        p.validate();
      } catch (const DomainError& e) {
        throw ConfigError("grid point " + grid.name + "=" + std::to_string(v) + ": " + e.what());
      }
      if (grid.name == "mu_norm" && !(v > 0.0)) throw ConfigError("mu_norm grid values must be > 0");
    }
    if (kind == ExperimentKind::kSyntheticLearned && learned.learning_rate <= 0.0)
      throw ConfigError("learned.learning_rate must be > 0");
  } else {
    if (dataset.empty()) throw ConfigError("experiment '" + std::string(to_string(kind)) + "' needs a dataset manifest");
    train.validate();
    if (model.depth == 0) throw ConfigError("model depth must be >= 1");
    if (model.heads == 0) throw ConfigError("model heads must be >= 1");
  }
}

namespace {

class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a table");
  }
  ~Reader() = default;

  [[nodiscard]] bool has(const std::string& k) {
    used_.insert(k);
    return j_.contains(k);
  }
  double number(const std::string& k) {
    const json& v = at(k);
    if (!v.is_number()) fail(k, "a number");
    return v.get<double>();
  }
  std::int64_t integer(const std::string& k) {
    const json& v = at(k);
    if (!v.is_number_integer()) fail(k, "an integer");
    return v.get<std::int64_t>();
  }
  std::size_t count(const std::string& k) {
    const auto v = integer(k);
    if (v < 0) throw ConfigError(path(k) + " must be >= 0");
    return static_cast<std::size_t>(v);
  }
  bool boolean(const std::string& k) {
    const json& v = at(k);
    if (!v.is_boolean()) fail(k, "a boolean");
    return v.get<bool>();
  }
  std::string string(const std::string& k) {
    const json& v = at(k);
    if (!v.is_string()) fail(k, "a string");
    return v.get<std::string>();
  }
  const json& raw(const std::string& k) { return at(k); }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.contains(k)) throw ConfigError("unknown key " + path(k));
  }

 private:
  const json& at(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }
  [[noreturn]] void fail(const std::string& k, const char* what) const {
    throw ConfigError(path(k) + " must be " + what);
  }
  [[nodiscard]] std::string path(const std::string& k) const { return where_.empty() ? k : where_ + "." + k; }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

// Numbers, "easy" or "<factor>*easy" (multiples of the easy-regime |mu|).
double mu_value(const json& v, const CsbmParams& p, const std::string& what) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw ConfigError(what + " must be a number or \"easy\"");
  const std::string s = v.get<std::string>();
  const double easy = easy_regime_mu_norm(p.n, p.sigma);
  if (s == "easy") return easy;
  const auto star = s.find("*easy");
  if (star != std::string::npos && star + 5 == s.size()) {
    try {
      std::size_t used = 0;
      const double f = std::stod(s.substr(0, star), &used);
      if (used == star) return f * easy;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(what + ": cannot interpret '" + s + "'");
}

std::vector<std::string> string_list(const json& v, const std::string& what) {
  if (!v.is_array()) throw ConfigError(what + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError(what + " must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

void apply(ExperimentConfig& c, const json& root, const std::filesystem::path& base) {
  Reader r(root, "");
  if (r.has("experiment")) {
    const auto k = parse_experiment_kind(r.string("experiment"));
    if (k != c.kind)
      throw ConfigError("config describes a '" + std::string(to_string(k)) + "' experiment, expected '" +
                        std::string(to_string(c.kind)) + "'");
  }
  if (r.has("id")) c.id = r.string("id");
  if (r.has("models")) c.models = string_list(r.raw("models"), "models");
  if (r.has("runs")) c.runs = r.count("runs");
  if (r.has("seed")) c.seed = static_cast<std::uint64_t>(r.integer("seed"));
  if (r.has("out")) c.out = base / r.string("out");
  if (r.has("format")) c.format = parse_output_format(r.string("format"));
  if (r.has("jobs")) c.jobs = r.count("jobs");
  if (r.has("record_time")) c.record_time = r.boolean("record_time");
  if (r.has("dataset")) c.dataset = base / r.string("dataset");

  std::optional<json> mu_spec;
  if (r.has("csbm")) {
    Reader s(r.raw("csbm"), "csbm");
    if (s.has("n")) c.csbm.n = s.count("n");
    if (s.has("p")) c.csbm.p = s.number("p");
    if (s.has("q")) c.csbm.q = s.number("q");
    if (s.has("sigma")) c.csbm.sigma = s.number("sigma");
    if (s.has("d")) c.csbm.d = s.count("d");
    if (s.has("mu_norm")) mu_spec = s.raw("mu_norm");
    s.finish();
  }
  c.csbm.mu_norm = mu_value(mu_spec.value_or(json("easy")), c.csbm, "csbm.mu_norm");

  if (r.has("grid")) {
    if (!is_synthetic(c.kind))
      throw ConfigError("experiment '" + std::string(to_string(c.kind)) + "' has a fixed grid; remove [grid]");
    Reader g(r.raw("grid"), "grid");
    GridSpec grid;
    grid.name = g.has("name") ? g.string("name") : c.grid.name;
    if (g.has("values")) {
      const json& vals = g.raw("values");
      if (!vals.is_array()) throw ConfigError("grid.values must be an array");
      for (const auto& v : vals) grid.values.push_back(mu_value(v, c.csbm, "grid.values"));
      if (g.has("min") || g.has("max") || g.has("steps")) throw ConfigError("grid: give either values or min/max/steps");
    } else {
      const bool mu = grid.name == "mu_norm";
      const double lo = g.has("min") ? mu_value(g.raw("min"), c.csbm, "grid.min") : (mu ? kMuGridMin : 0.0);
      const double hi = g.has("max") ? mu_value(g.raw("max"), c.csbm, "grid.max")
                                     : (mu ? 2.0 * easy_regime_mu_norm(c.csbm.n, c.csbm.sigma) : 0.5);
      const std::size_t steps = g.has("steps") ? g.count("steps") : (mu ? kMuGridSteps : 11);
      grid = GridSpec::linspace(grid.name, lo, hi, steps);
    }
    g.finish();
    c.grid = std::move(grid);
  }

  if (r.has("model")) {
    Reader m(r.raw("model"), "model");
    if (m.has("depth")) c.model.depth = m.count("depth");
    if (m.has("hidden")) c.model.hidden = m.count("hidden");
    if (m.has("heads")) c.model.heads = m.count("heads");
    if (m.has("residual")) c.model.residual = m.boolean("residual");
    if (m.has("leaky_slope")) c.model.leaky_slope = m.number("leaky_slope");
    if (m.has("lambda1_x")) c.model.lambda1_x = m.number("lambda1_x");
    if (m.has("lambda2_x")) c.model.lambda2_x = m.number("lambda2_x");
    double gain = c.init.gain;
    if (m.has("gain")) gain = m.number("gain");
    if (m.has("init")) {
      const std::string s = m.string("init");
      if (s == "glorot_uniform") c.init = Initializer::glorot_uniform(gain);
      else if (s == "glorot_normal") c.init = Initializer::glorot_normal(gain);
      else throw ConfigError("model.init must be glorot_uniform or glorot_normal");
    }
    c.init.gain = gain;
    m.finish();
  }
  if (r.has("train")) {
    Reader t(r.raw("train"), "train");
    if (t.has("learning_rate")) c.train.learning_rate = t.number("learning_rate");
    if (t.has("epochs")) c.train.epochs = t.count("epochs");
    if (t.has("lr_decay_gamma")) c.train.lr_decay_gamma = t.number("lr_decay_gamma");
    if (t.has("weight_decay")) c.train.weight_decay = t.number("weight_decay");
    if (t.has("patience")) c.train.early_stop_patience = t.count("patience");
    if (t.has("metric")) c.train.metric = parse_metric(t.string("metric"));
    t.finish();
  }
  if (r.has("learned")) {
    Reader l(r.raw("learned"), "learned");
    if (l.has("learning_rate")) c.learned.learning_rate = l.number("learning_rate");
    if (l.has("epochs")) c.learned.epochs = l.count("epochs");
    if (l.has("lr_decay_gamma")) c.learned.lr_decay_gamma = l.number("lr_decay_gamma");
    if (l.has("beta")) c.learned.beta = l.number("beta");
    if (l.has("initial_C")) c.learned.initial_C = l.number("initial_C");
    if (l.has("initial_x1")) c.learned.initial_x1 = l.number("initial_x1");
    if (l.has("initial_x2")) c.learned.initial_x2 = l.number("initial_x2");
    l.finish();
  }
  r.finish();
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view text, bool is_json, std::optional<ExperimentKind> kind) {
  json root;
  if (is_json) {
    try {
      root = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  } else {
    root = detail::parse_toml(text);
  }
  if (!kind) {
    if (!root.is_object() || !root.contains("experiment") || !root["experiment"].is_string())
      throw ConfigError("config needs an 'experiment' key");
    kind = parse_experiment_kind(root["experiment"].get<std::string>());
  }
  ExperimentConfig c = default_experiment_config(*kind);
  apply(c, root, {});
  c.validate();
  return c;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const bool is_json = path.extension() == ".json";
  json root;
  try {
    root = is_json ? json::parse(ss.str()) : detail::parse_toml(ss.str());
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": not valid JSON: " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!kind) {
    if (!root.is_object() || !root.contains("experiment") || !root["experiment"].is_string())
      throw ConfigError(path.string() + ": config needs an 'experiment' key");
    kind = parse_experiment_kind(root["experiment"].get<std::string>());
  }
  ExperimentConfig c = default_experiment_config(*kind);
  try {
    apply(c, root, path.parent_path());
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind) {
  ExperimentConfig c = read_experiment_config(path, kind);
  c.validate();
  return c;
}

}  // namespace lcat
