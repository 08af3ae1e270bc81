#include "lcat/train.hpp"

#include <cmath>

#include <json.hpp>

#include "lcat/error.hpp"
#include "lcat/optim.hpp"

namespace lcat {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
  if (early_stop_patience && *early_stop_patience == 0) throw ConfigError("early_stop_patience must be >= 1");
  if (!(lr_decay_gamma > 0.0 && lr_decay_gamma <= 1.0)) throw ConfigError("lr_decay_gamma must lie in (0, 1]");
}

void check_train_config(const Model& model, const TrainConfig& config) {
  config.validate();
  if (config.weight_decay != 0.0 && model.has_learnable_lambdas())
    throw ConfigError("weight_decay must be 0 for models with learnable lambdas (it biases lambda1 towards 0 and "
                      "lambda2 towards 1)");
}

namespace {

struct Targets {
  bool binary = false;
  std::vector<double> bce;
};

Targets make_targets(const Model& model, const LabelledDataset& data) {
  Targets t;
  const std::size_t out = model.spec().out_dim;
  if (data.num_classes == 2 && out == 1) {
    t.binary = true;
    t.bce.resize(data.labels.size());
    for (std::size_t i = 0; i < data.labels.size(); ++i) t.bce[i] = data.labels[i] == 1 ? 1.0 : 0.0;
  } else if (out != static_cast<std::size_t>(data.num_classes)) {
    throw ConfigError("model output width " + std::to_string(out) + " does not fit " +
                      std::to_string(data.num_classes) + " classes");
  }
  return t;
}

bool any(const std::vector<std::uint8_t>& m) {
  for (auto v : m)
    if (v) return true;
  return false;
}

}  // namespace

TrainLog train(Model& model, const LabelledDataset& data, const TrainConfig& config) {
  check_train_config(model, config);
  data.validate();
  if (!any(data.train_mask)) throw ConfigError("dataset has no training nodes");
  if (!any(data.val_mask)) throw ConfigError("dataset has no validation nodes");
  if (!any(data.test_mask)) throw ConfigError("dataset has no test nodes");
  const Targets targets = make_targets(model, data);

  Adam opt(model.parameters(), AdamConfig{config.learning_rate, config.beta1, config.beta2, config.epsilon,
                                         config.lr_decay_gamma, config.weight_decay});
  TrainLog log;
  std::size_t since_best = 0;
  for (std::size_t t = 0;; ++t) {
    const bool last = t == config.epochs;
    ad::Tape tape;
    const ad::Tensor logits = model.forward(tape, data.graph, data.features);
    const ad::Tensor loss = targets.binary ? ad::binary_cross_entropy(logits, targets.bce, data.train_mask)
                                           : ad::cross_entropy(logits, data.labels, data.train_mask);
    const double lv = loss.value().item();
    const Matrix& z = logits.value();
    if (!std::isfinite(lv) || !z.all_finite()) {
      log.aborted = true;
      log.abort_reason = "non-finite loss at epoch " + std::to_string(t);
      break;
    }
    log.train_loss.push_back(lv);
    log.train_metric.push_back(evaluate_metric(z, data.labels, data.train_mask, config.metric));
    log.val_metric.push_back(evaluate_metric(z, data.labels, data.val_mask, config.metric));
    log.test_metric.push_back(evaluate_metric(z, data.labels, data.test_mask, config.metric));
    log.lambdas.push_back(model.lambdas());

    const auto& val = log.val_metric.back();
    const bool improved = log.best_parameters.empty() || (val && (!log.best_val_metric || *val > *log.best_val_metric));
    if (improved) {
      log.best_epoch = t;
      log.best_val_metric = val;
      log.test_at_best = log.test_metric.back();
      log.best_parameters = model.snapshot();
      since_best = 0;
    } else {
      ++since_best;
    }
    if (last || (config.early_stop_patience && since_best >= *config.early_stop_patience)) break;

    try {
      opt.step(tape.backward(loss));
    } catch (const RuntimeFailure& e) {
      log.aborted = true;
      log.abort_reason = std::string(e.what()) + " at epoch " + std::to_string(t);
      break;
    }
  }
  if (!log.best_parameters.empty()) model.restore(log.best_parameters);
  return log;
}

std::string train_log_to_json(const TrainLog& log) {
  using nlohmann::json;
  const auto opt_array = [](const std::vector<std::optional<double>>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(x ? json(*x) : json(nullptr));
    return a;
  };
  json lambdas = json::object();
  const std::size_t layers = log.lambdas.empty() ? 0 : log.lambdas.front().size();
  for (std::size_t l = 0; l < layers; ++l) {
    json l1 = json::array(), l2 = json::array();
    for (const auto& row : log.lambdas) {
      l1.push_back(row[l].first);
      l2.push_back(row[l].second);
    }
    lambdas[std::to_string(l)] = {{"lambda1", l1}, {"lambda2", l2}};
  }
  json j{{"epochs", log.entries() == 0 ? 0 : log.entries() - 1},
         {"losses", log.train_loss},
         {"train_metric", opt_array(log.train_metric)},
         {"val_metric", opt_array(log.val_metric)},
         {"test_metric", opt_array(log.test_metric)},
         {"lambdas", lambdas},
         {"best_epoch", log.best_epoch},
         {"best_val_metric", log.best_val_metric ? json(*log.best_val_metric) : json(nullptr)},
         {"test_at_best", log.test_at_best ? json(*log.test_at_best) : json(nullptr)},
         {"aborted", log.aborted},
         {"abort_reason", log.abort_reason}};
  return j.dump(2);
}

}  // namespace lcat
