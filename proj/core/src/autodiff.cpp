#include "lcat/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "lcat/error.hpp"

namespace lcat::ad {

const Matrix& Tensor::value() const {
  if (!tape_) throw RuntimeFailure("use of an unbound tensor");
  return tape_->value(id_);
}

bool Tensor::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

const Matrix& Gradients::of(const Parameter& p) const {
  auto it = grads_.find(&p);
  if (it == grads_.end()) throw RuntimeFailure("no gradient recorded for parameter '" + p.name + "'");
  return it->second;
}

void Tape::check_open(std::string_view op) const {
  if (consumed_) throw RuntimeFailure("tape already consumed; cannot record '" + std::string(op) + "'");
}

Tensor Tape::constant(Matrix value) {
  check_open("constant");
  nodes_.push_back(Node{"constant", std::move(value), {}, {}, false, nullptr});
  return {this, nodes_.size() - 1};
}

Tensor Tape::parameter(Parameter& p) {
  check_open("parameter");
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  nodes_.push_back(Node{"parameter", p.value, {}, {}, true, &p});
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Tensor Tape::record(std::string_view op, Matrix value, std::vector<Tensor> inputs, BackwardFn backward) {
  check_open(op);
  Node node{op, std::move(value), {}, std::move(backward), false, nullptr};
  node.inputs.reserve(inputs.size());
  for (const auto& t : inputs) {
    if (t.tape() != this) throw RuntimeFailure("operand of '" + std::string(op) + "' belongs to another tape");
    node.inputs.push_back(t.id());
    node.requires_grad = node.requires_grad || nodes_[t.id()].requires_grad;
  }
  if (!node.requires_grad) node.backward = nullptr;
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

Gradients Tape::backward(const Tensor& loss) {
  if (consumed_) throw RuntimeFailure("backward called twice on the same tape");
  if (loss.tape() != this) throw RuntimeFailure("loss belongs to another tape");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward needs a 1x1 loss, got " + lv.shape_string());
  consumed_ = true;

  std::vector<Matrix> grads(nodes_.size());
  if (nodes_[loss.id()].requires_grad) grads[loss.id()] = Matrix::scalar(1.0);

  std::vector<Matrix*> slots;
  for (std::size_t k = loss.id() + 1; k-- > 0;) {
    Node& node = nodes_[k];
    if (grads[k].empty() || !node.backward) continue;
    slots.assign(node.inputs.size(), nullptr);
    for (std::size_t s = 0; s < node.inputs.size(); ++s) {
      const std::size_t in = node.inputs[s];
      if (!nodes_[in].requires_grad) continue;
      if (grads[in].empty()) grads[in] = Matrix(nodes_[in].value.rows(), nodes_[in].value.cols());
      slots[s] = &grads[in];
    }
    node.backward(grads[k], slots);
    grads[k] = Matrix{};
    node.backward = nullptr;
  }

  Gradients out;
  for (const auto& [param, id] : param_nodes_) {
    Matrix g = grads[id].empty() ? Matrix(nodes_[id].value.rows(), nodes_[id].value.cols()) : std::move(grads[id]);
    if (!g.all_finite()) throw RuntimeFailure("non-finite gradient for parameter '" + param->name + "'");
    out.grads_.emplace(param, std::move(g));
  }
  return out;
}

void Tape::note_kinks(std::span<const double> pre_activation) noexcept {
  if (!track_kinks_) return;
  for (double v : pre_activation) note_kink_bit(v > 0.0);
}

void Tape::note_kink_bit(bool positive) noexcept {
  kink_signature_ ^= positive ? 0x9eULL : 0x35ULL;
  kink_signature_ *= 0x100000001b3ULL;
}

namespace {

void require_same_shape(std::string_view op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shapes " + a.shape_string() + " and " + b.shape_string() + " differ");
}

void require_scalar(std::string_view op, const Matrix& s) {
  if (s.rows() != 1 || s.cols() != 1) throw ShapeError(std::string(op) + ": expected 1x1, got " + s.shape_string());
}

Tape& tape_of(std::string_view op, const Tensor& t) {
  if (!t.tape()) throw RuntimeFailure(std::string(op) + ": unbound tensor");
  return *t.tape();
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) throw ShapeError("matmul: " + av.shape_string() + " x " + bv.shape_string());
  Tape& t = tape_of("matmul", a);
  return t.record("matmul", lcat::matmul(av, bv), {a, b},
                  [&t, ia = a.id(), ib = b.id()](const Matrix& g, std::span<Matrix* const> out) {
                    if (out[0]) *out[0] += lcat::matmul(g, transpose(t.value(ib)));
                    if (out[1]) *out[1] += lcat::matmul(transpose(t.value(ia)), g);
                  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a.value(), b.value());
  Matrix v = a.value();
  v += b.value();
  return tape_of("add", a).record("add", std::move(v), {a, b}, [](const Matrix& g, std::span<Matrix* const> out) {
    if (out[0]) *out[0] += g;
    if (out[1]) *out[1] += g;
  });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  const Matrix& xv = x.value();
  const Matrix& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols())
    throw ShapeError("add_row_bias: bias " + bv.shape_string() + " for input " + xv.shape_string());
  Matrix v = xv;
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < v.cols(); ++c) v(r, c) += bv(0, c);
  return tape_of("add_row_bias", x).record("add_row_bias", std::move(v), {x, bias},
                                           [](const Matrix& g, std::span<Matrix* const> out) {
                                             if (out[0]) *out[0] += g;
                                             if (out[1]) {
                                               Matrix& gb = *out[1];
                                               for (std::size_t r = 0; r < g.rows(); ++r)
                                                 for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
                                             }
                                           });
}

Tensor scale(const Tensor& x, double factor) {
  Matrix v = x.value();
  for (double& e : v.data()) e *= factor;
  return tape_of("scale", x).record("scale", std::move(v), {x}, [factor](const Matrix& g, std::span<Matrix* const> out) {
    auto dst = out[0]->data();
    auto src = g.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += factor * src[k];
  });
}

Tensor scale_by(const Tensor& s, const Tensor& x) {
  require_scalar("scale_by", s.value());
  const double sv = s.value().item();
  Matrix v = x.value();
  for (double& e : v.data()) e *= sv;
  Tape& t = tape_of("scale_by", s);
  return t.record("scale_by", std::move(v), {s, x},
                  [&t, is = s.id(), ix = x.id()](const Matrix& g, std::span<Matrix* const> out) {
                    const auto gd = g.data();
                    if (out[0]) {
                      const auto xd = t.value(ix).data();
                      double acc = 0.0;
                      for (std::size_t k = 0; k < gd.size(); ++k) acc += gd[k] * xd[k];
                      (*out[0])(0, 0) += acc;
                    }
                    if (out[1]) {
                      const double sv2 = t.value(is).item();
                      auto dst = out[1]->data();
                      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += sv2 * gd[k];
                    }
                  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape("hadamard", a.value(), b.value());
  Matrix v = a.value();
  const auto bd = b.value().data();
  auto vd = v.data();
  for (std::size_t k = 0; k < vd.size(); ++k) vd[k] *= bd[k];
  Tape& t = tape_of("hadamard", a);
  return t.record("hadamard", std::move(v), {a, b},
                  [&t, ia = a.id(), ib = b.id()](const Matrix& g, std::span<Matrix* const> out) {
                    const auto gd = g.data();
                    if (out[0]) {
                      const auto other = t.value(ib).data();
                      auto dst = out[0]->data();
                      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += gd[k] * other[k];
                    }
                    if (out[1]) {
                      const auto other = t.value(ia).data();
                      auto dst = out[1]->data();
                      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += gd[k] * other[k];
                    }
                  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t rows = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  Matrix v(rows, total);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const Matrix& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(pv.row(r).data(), pv.cols(), v.row(r).data() + off);
    off += pv.cols();
  }
  return tape_of("concat_cols", parts[0])
      .record("concat_cols", std::move(v), {parts.begin(), parts.end()},
              [widths](const Matrix& g, std::span<Matrix* const> out) {
                std::size_t o = 0;
                for (std::size_t k = 0; k < out.size(); ++k) {
                  if (out[k]) {
                    Matrix& dst = *out[k];
                    for (std::size_t r = 0; r < g.rows(); ++r)
                      for (std::size_t c = 0; c < widths[k]; ++c) dst(r, c) += g(r, o + c);
                  }
                  o += widths[k];
                }
              });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  const Matrix& xv = x.value();
  if (begin + count > xv.rows())
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ") of " +
                     xv.shape_string());
  Matrix v(count, xv.cols());
  std::copy_n(xv.data().data() + begin * xv.cols(), count * xv.cols(), v.data().data());
  return tape_of("slice_rows", x).record("slice_rows", std::move(v), {x},
                                         [begin](const Matrix& g, std::span<Matrix* const> out) {
                                           auto dst = out[0]->data().subspan(begin * g.cols(), g.size());
                                           auto src = g.data();
                                           for (std::size_t k = 0; k < src.size(); ++k) dst[k] += src[k];
                                         });
}

Tensor average(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("average: no operands");
  Matrix v = parts[0].value();
  for (std::size_t k = 1; k < parts.size(); ++k) {
    require_same_shape("average", v, parts[k].value());
    v += parts[k].value();
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  for (double& e : v.data()) e *= inv;
  return tape_of("average", parts[0])
      .record("average", std::move(v), {parts.begin(), parts.end()}, [inv](const Matrix& g, std::span<Matrix* const> out) {
        for (Matrix* dst : out) {
          if (!dst) continue;
          auto d = dst->data();
          auto s = g.data();
          for (std::size_t k = 0; k < d.size(); ++k) d[k] += inv * s[k];
        }
      });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Tape& t = tape_of("leaky_relu", x);
  const Matrix& xv = x.value();
  t.note_kinks(xv.data());
  Matrix v = xv;
  for (double& e : v.data()) e = e > 0.0 ? e : slope * e;
  return t.record("leaky_relu", std::move(v), {x}, [&t, ix = x.id(), slope](const Matrix& g, std::span<Matrix* const> out) {
    const auto xd = t.value(ix).data();
    const auto gd = g.data();
    auto dst = out[0]->data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += xd[k] > 0.0 ? gd[k] : slope * gd[k];
  });
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
  require_scalar("prelu", slope.value());
  Tape& t = tape_of("prelu", x);
  const Matrix& xv = x.value();
  t.note_kinks(xv.data());
  const double a = slope.value().item();
  Matrix v = xv;
  for (double& e : v.data()) e = e > 0.0 ? e : a * e;
  return t.record("prelu", std::move(v), {x, slope},
                  [&t, ix = x.id(), is = slope.id()](const Matrix& g, std::span<Matrix* const> out) {
                    const auto xd = t.value(ix).data();
                    const auto gd = g.data();
                    const double a2 = t.value(is).item();
                    if (out[0]) {
                      auto dst = out[0]->data();
                      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += xd[k] > 0.0 ? gd[k] : a2 * gd[k];
                    }
                    if (out[1]) {
                      double acc = 0.0;
                      for (std::size_t k = 0; k < xd.size(); ++k)
                        if (!(xd[k] > 0.0)) acc += gd[k] * xd[k];
                      (*out[1])(0, 0) += acc;
                    }
                  });
}

Tensor sigmoid(const Tensor& x) {
  Matrix v = x.value();
  for (double& e : v.data()) e = e >= 0.0 ? 1.0 / (1.0 + std::exp(-e)) : std::exp(e) / (1.0 + std::exp(e));
  Tape& t = tape_of("sigmoid", x);
  const std::size_t self = t.size();
  return t.record("sigmoid", std::move(v), {x}, [&t, self](const Matrix& g, std::span<Matrix* const> out) {
    const auto yd = t.value(self).data();
    const auto gd = g.data();
    auto dst = out[0]->data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += gd[k] * yd[k] * (1.0 - yd[k]);
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double e : x.value().data()) acc += e;
  return tape_of("sum", x).record("sum", Matrix::scalar(acc), {x}, [](const Matrix& g, std::span<Matrix* const> out) {
    const double gv = g.item();
    for (double& e : out[0]->data()) e += gv;
  });
}

Tensor mean(const Tensor& x) {
  const std::size_t n = x.value().size();
  if (n == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

}  // namespace lcat::ad
