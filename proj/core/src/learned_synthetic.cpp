#include "lcat/learned_synthetic.hpp"

#include <cmath>
#include <string>

#include "lcat/error.hpp"
#include "lcat/optim.hpp"
#include "lcat/transforms.hpp"

namespace lcat {

std::string_view to_string(LearnedModelKind kind) {
  switch (kind) {
    case LearnedModelKind::kGCN: return "GCN";
    case LearnedModelKind::kGAT: return "GAT";
    case LearnedModelKind::kCAT: return "CAT";
    case LearnedModelKind::kLCAT: return "LCAT";
  }
  return "?";
}

LearnedModelKind parse_learned_model_kind(std::string_view s) {
  if (s == "GCN") return LearnedModelKind::kGCN;
  if (s == "GAT") return LearnedModelKind::kGAT;
  if (s == "CAT") return LearnedModelKind::kCAT;
  if (s == "LCAT" || s == "L-CAT") return LearnedModelKind::kLCAT;
  throw ConfigError("unknown learned-synthetic model '" + std::string(s) + "' (expected GCN, GAT, CAT or LCAT)");
}

namespace {

double mu_norm_of(const std::vector<double>& mu) {
  double s = 0.0;
  for (double v : mu) s += v * v;
  return std::sqrt(s);
}

double sigmoid10(double x) { return 1.0 / (1.0 + std::exp(-10.0 * x)); }

}  // namespace

LearnedSyntheticModel::LearnedSyntheticModel(LearnedModelKind kind, const CsbmSample& sample,
                                             const LearnedSyntheticConfig& config)
    : kind_(kind),
      sample_(&sample),
      c_{"C", Matrix::scalar(config.initial_C)},
      x1_{"lambda1_x", Matrix::scalar(config.initial_x1)},
      x2_{"lambda2_x", Matrix::scalar(config.initial_x2)} {
  const double norm = mu_norm_of(sample.mu);
  if (!(norm > 0.0)) throw DomainError("learned synthetic: |mu| must be > 0");
  std::vector<double> w(sample.mu.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = sample.mu[k] / norm;
  spec_.graph = sample.graph;
  spec_.values = std::make_shared<const std::vector<double>>(project_rows(sample.features, w));
  spec_.mu_norm = norm;
  spec_.R = config.R > 0.0 ? config.R : 7.0 / norm;
  spec_.beta = config.beta;
  targets_.resize(sample.task_labels.size());
  for (std::size_t i = 0; i < targets_.size(); ++i) targets_[i] = sample.task_labels[i] ? 0.0 : 1.0;
  all_.assign(targets_.size(), 1);
}

std::vector<ad::Parameter*> LearnedSyntheticModel::parameters() {
  if (kind_ == LearnedModelKind::kLCAT) return {&c_, &x1_, &x2_};
  return {&c_};
}

double LearnedSyntheticModel::lambda1() const {
  switch (kind_) {
    case LearnedModelKind::kGCN: return 0.0;
    case LearnedModelKind::kLCAT: return sigmoid10(x1_.value.item());
    default: return 1.0;
  }
}

double LearnedSyntheticModel::lambda2() const {
  switch (kind_) {
    case LearnedModelKind::kGAT: return 0.0;
    case LearnedModelKind::kLCAT: return sigmoid10(x2_.value.item());
    default: return 1.0;
  }
}

ad::Tensor LearnedSyntheticModel::logits(ad::Tape& tape) {
  const ad::Tensor c = tape.parameter(c_);
  ad::Tensor agg;
  switch (kind_) {
    case LearnedModelKind::kGCN:
      agg = tape.constant(neighborhood_mean(spec_.graph, Matrix::column(*spec_.values), 1.0));
      break;
    case LearnedModelKind::kGAT:
      agg = ad::ansatz_aggregate(c, tape.constant_scalar(1.0), tape.constant_scalar(0.0), spec_);
      break;
    case LearnedModelKind::kCAT:
      agg = ad::ansatz_aggregate(c, tape.constant_scalar(1.0), tape.constant_scalar(1.0), spec_);
      break;
    case LearnedModelKind::kLCAT:
      agg = ad::ansatz_aggregate(c, ad::sigmoid(ad::scale(tape.parameter(x1_), 10.0)),
                                 ad::sigmoid(ad::scale(tape.parameter(x2_), 10.0)), spec_);
      break;
  }
  return ad::add_row_bias(agg, ad::scale(c, -spec_.mu_norm / 2.0));
}

ad::Tensor LearnedSyntheticModel::loss(ad::Tape& tape) {
  return ad::binary_cross_entropy(logits(tape), targets_, all_);
}

double LearnedSyntheticModel::accuracy() {
  ad::Tape tape;
  const Matrix z = logits(tape).value();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const std::uint8_t predicted_c0 = z(i, 0) < 0.0 ? 1 : 0;
    correct += predicted_c0 == sample_->task_labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(z.rows());
}

LearnedSyntheticResult train_learned_synthetic(LearnedModelKind kind, const CsbmSample& sample,
                                               const LearnedSyntheticConfig& config) {
  LearnedSyntheticModel model(kind, sample, config);
  Adam opt(model.parameters(), AdamConfig{config.learning_rate, 0.9, 0.999, 1e-8, config.lr_decay_gamma});
  LearnedSyntheticResult res;
  res.kind = kind;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ad::Tape tape;
    const ad::Tensor l = model.loss(tape);
    const double lv = l.value().item();
    if (!std::isfinite(lv)) throw RuntimeFailure("learned synthetic: non-finite loss at epoch " + std::to_string(epoch));
    res.losses.push_back(lv);
    opt.step(tape.backward(l));
  }
  res.accuracy = model.accuracy();
  res.C = model.C();
  res.lambda1 = model.lambda1();
  res.lambda2 = model.lambda2();
  return res;
}

}  // namespace lcat
