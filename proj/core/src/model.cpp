#include "lcat/model.hpp"

#include <string>

#include "lcat/error.hpp"

namespace lcat {

void ModelSpec::validate() const {
  if (depth == 0) throw ConfigError("model depth must be >= 1");
  if (in_dim == 0) throw ConfigError("model input width must be >= 1");
  if (out_dim == 0) throw ConfigError("model output width must be >= 1");
  if (depth > 1 && hidden == 0) throw ConfigError("hidden width must be >= 1");
  if (heads == 0) throw ConfigError("heads must be >= 1");
  if (!layer_kinds.empty() && layer_kinds.size() != depth)
    throw ConfigError("layer_kinds has " + std::to_string(layer_kinds.size()) + " entries for depth " +
                      std::to_string(depth));
  for (std::size_t l = 0; l + 1 < depth; ++l)
    if (kind_at(l) != LayerKind::kGCN && hidden_merge == HeadMerge::kConcat && hidden % heads != 0)
      throw ConfigError("hidden width " + std::to_string(hidden) + " is not divisible by " + std::to_string(heads) +
                        " heads");
}

LayerKind ModelSpec::kind_at(std::size_t layer) const { return layer_kinds.empty() ? kind : layer_kinds.at(layer); }

Model::Model(const ModelSpec& spec, const Initializer& init, Rng& rng) : spec_(spec) {
  spec_.validate();
  std::size_t width = spec_.in_dim;
  for (std::size_t l = 0; l < spec_.depth; ++l) {
    const bool last = l + 1 == spec_.depth;
    LayerConfig lc;
    lc.kind = spec_.kind_at(l);
    lc.in_dim = width;
    lc.heads = lc.kind == LayerKind::kGCN ? 1 : spec_.heads;
    lc.merge = last ? spec_.output_merge : spec_.hidden_merge;
    const std::size_t target = last ? spec_.out_dim : spec_.hidden;
    lc.out_dim = lc.merge == HeadMerge::kConcat ? target / lc.heads : target;
    if (lc.merge == HeadMerge::kConcat && target % lc.heads != 0)
      throw ConfigError("layer " + std::to_string(l) + ": width " + std::to_string(target) + " not divisible by heads");
    lc.leaky_slope = spec_.leaky_slope;
    lc.lambda1_x = spec_.lambda1_x;
    lc.lambda2_x = spec_.lambda2_x;
    auto layer = std::make_unique<LcatLayer>(lc, init, rng);
    for (auto* p : layer->parameters()) p->name = "layer" + std::to_string(l) + "." + p->name;
    layer->x1.name = "layer" + std::to_string(l) + ".lambda1_x";
    layer->x2.name = "layer" + std::to_string(l) + ".lambda2_x";
    width = layer->output_dim();
    layers_.push_back(std::move(layer));
    if (!last)
      prelu_.push_back(std::make_unique<ad::Parameter>(
          ad::Parameter{"prelu" + std::to_string(l), Matrix::scalar(0.25)}));
  }
}

ad::Tensor Model::forward(ad::Tape& tape, const Graph& graph, const Matrix& x) {
  ad::Tensor h = tape.constant(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    ad::Tensor out = layers_[l]->forward(tape, graph, h);
    if (l + 1 == layers_.size()) return out;
    out = ad::prelu(out, tape.parameter(*prelu_[l]));
    if (spec_.residual && out.cols() == h.cols()) out = ad::add(out, h);
    h = out;
  }
  return h;
}

std::vector<ad::Parameter*> Model::parameters() {
  std::vector<ad::Parameter*> out;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    for (auto* p : layers_[l]->parameters()) out.push_back(p);
    if (l < prelu_.size()) out.push_back(prelu_[l].get());
  }
  return out;
}

std::size_t Model::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->value.size();
  return n;
}

std::vector<std::pair<double, double>> Model::lambdas() const {
  std::vector<std::pair<double, double>> out;
  for (const auto& l : layers_) out.push_back(l->effective_lambdas());
  return out;
}

bool Model::has_learnable_lambdas() const {
  for (const auto& l : layers_)
    if (lcat::has_learnable_lambdas(l->config().kind)) return true;
  return false;
}

std::vector<Matrix> Model::snapshot() {
  std::vector<Matrix> out;
  for (auto* p : parameters()) out.push_back(p->value);
  return out;
}

void Model::restore(const std::vector<Matrix>& values) {
  auto params = parameters();
  if (values.size() != params.size()) throw ShapeError("restore: snapshot does not match the model");
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = values[k];
}

std::unique_ptr<Model> build_model(const ModelSpec& spec, const Initializer& init, Rng& rng) {
  return std::make_unique<Model>(spec, init, rng);
}

}  // namespace lcat
