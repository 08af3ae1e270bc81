#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "lcat/autodiff.hpp"
#include "lcat/error.hpp"

namespace lcat::ad {

namespace {

Tape& tape_of(std::string_view op, const Tensor& t) {
  if (!t.tape()) throw RuntimeFailure(std::string(op) + ": unbound tensor");
  return *t.tape();
}

void require_entries(std::string_view op, const Matrix& x, const Graph& graph) {
  if (x.rows() != graph.num_entries())
    throw ShapeError(std::string(op) + ": " + std::to_string(x.rows()) + " rows for " +
                     std::to_string(graph.num_entries()) + " graph entries");
}

}  // namespace

Tensor gather_rows(const Tensor& x, std::shared_ptr<const std::vector<NodeId>> index) {
  const Matrix& xv = x.value();
  const std::size_t c = xv.cols();
  Matrix v(index->size(), c);
  for (std::size_t e = 0; e < index->size(); ++e) {
    const auto src = static_cast<std::size_t>((*index)[e]);
    if (src >= xv.rows()) throw ShapeError("gather_rows: index " + std::to_string(src) + " out of range");
    std::copy_n(xv.row(src).data(), c, v.row(e).data());
  }
  return tape_of("gather_rows", x).record("gather_rows", std::move(v), {x},
                                          [index](const Matrix& g, std::span<Matrix* const> out) {
                                            Matrix& dst = *out[0];
                                            for (std::size_t e = 0; e < index->size(); ++e) {
                                              auto d = dst.row(static_cast<std::size_t>((*index)[e]));
                                              auto s = g.row(e);
                                              for (std::size_t k = 0; k < d.size(); ++k) d[k] += s[k];
                                            }
                                          });
}

Tensor segment_sum(const Tensor& x, const Graph& graph) {
  const Matrix& xv = x.value();
  require_entries("segment_sum", xv, graph);
  const auto off = graph.row_offsets();
  const std::size_t n = graph.num_nodes();
  Matrix v(n, xv.cols());
  for (std::size_t i = 0; i < n; ++i) {
    auto d = v.row(i);
    for (auto e = off[i]; e < off[i + 1]; ++e) {
      auto s = xv.row(static_cast<std::size_t>(e));
      for (std::size_t k = 0; k < d.size(); ++k) d[k] += s[k];
    }
  }
  return tape_of("segment_sum", x).record("segment_sum", std::move(v), {x},
                                          [graph](const Matrix& g, std::span<Matrix* const> out) {
                                            const auto o = graph.row_offsets();
                                            Matrix& dst = *out[0];
                                            for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
                                              auto s = g.row(i);
                                              for (auto e = o[i]; e < o[i + 1]; ++e) {
                                                auto d = dst.row(static_cast<std::size_t>(e));
                                                for (std::size_t k = 0; k < d.size(); ++k) d[k] += s[k];
                                              }
                                            }
                                          });
}

Tensor segment_softmax(const Tensor& scores, const Graph& graph) {
  const Matrix& sv = scores.value();
  require_entries("segment_softmax", sv, graph);
  const auto off = graph.row_offsets();
  const std::size_t c = sv.cols();
  Matrix v(sv.rows(), c);
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    const auto lo = static_cast<std::size_t>(off[i]);
    const auto hi = static_cast<std::size_t>(off[i + 1]);
    for (std::size_t k = 0; k < c; ++k) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t e = lo; e < hi; ++e) mx = std::max(mx, sv(e, k));
      double z = 0.0;
      for (std::size_t e = lo; e < hi; ++e) z += (v(e, k) = std::exp(sv(e, k) - mx));
      for (std::size_t e = lo; e < hi; ++e) v(e, k) /= z;
    }
  }
  Tape& t = tape_of("segment_softmax", scores);
  const std::size_t self = t.size();
  return t.record("segment_softmax", std::move(v), {scores},
                  [&t, self, graph](const Matrix& g, std::span<Matrix* const> out) {
                    const Matrix& y = t.value(self);
                    const auto o = graph.row_offsets();
                    Matrix& dst = *out[0];
                    for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
                      const auto lo = static_cast<std::size_t>(o[i]);
                      const auto hi = static_cast<std::size_t>(o[i + 1]);
                      for (std::size_t k = 0; k < y.cols(); ++k) {
                        double dot = 0.0;
                        for (std::size_t e = lo; e < hi; ++e) dot += g(e, k) * y(e, k);
                        for (std::size_t e = lo; e < hi; ++e) dst(e, k) += y(e, k) * (g(e, k) - dot);
                      }
                    }
                  });
}

Tensor row_scale(const Tensor& x, const Tensor& w) {
  const Matrix& xv = x.value();
  const Matrix& wv = w.value();
  if (wv.cols() != 1 || wv.rows() != xv.rows())
    throw ShapeError("row_scale: weights " + wv.shape_string() + " for " + xv.shape_string());
  Matrix v = xv;
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (double& e : v.row(r)) e *= wv(r, 0);
  Tape& t = tape_of("row_scale", x);
  return t.record("row_scale", std::move(v), {x, w},
                  [&t, ix = x.id(), iw = w.id()](const Matrix& g, std::span<Matrix* const> out) {
                    const Matrix& xv2 = t.value(ix);
                    const Matrix& wv2 = t.value(iw);
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      auto gr = g.row(r);
                      if (out[0]) {
                        auto d = out[0]->row(r);
                        for (std::size_t k = 0; k < d.size(); ++k) d[k] += wv2(r, 0) * gr[k];
                      }
                      if (out[1]) {
                        auto xr = xv2.row(r);
                        double acc = 0.0;
                        for (std::size_t k = 0; k < gr.size(); ++k) acc += gr[k] * xr[k];
                        (*out[1])(r, 0) += acc;
                      }
                    }
                  });
}

Tensor weighted_aggregate(const Graph& graph, const Tensor& gamma, const Tensor& z) {
  const Matrix& gv = gamma.value();
  const Matrix& zv = z.value();
  require_entries("weighted_aggregate", gv, graph);
  if (gv.cols() != 1) throw ShapeError("weighted_aggregate: gamma must be E x 1, got " + gv.shape_string());
  if (zv.rows() != graph.num_nodes())
    throw ShapeError("weighted_aggregate: " + zv.shape_string() + " for " + std::to_string(graph.num_nodes()) + " nodes");
  const auto off = graph.row_offsets();
  const auto cols = graph.col_indices();
  const std::size_t c = zv.cols();
  Matrix v(graph.num_nodes(), c);
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    auto d = v.row(i);
    for (auto e = static_cast<std::size_t>(off[i]); e < static_cast<std::size_t>(off[i + 1]); ++e) {
      const double w = gv(e, 0);
      auto s = zv.row(static_cast<std::size_t>(cols[e]));
      for (std::size_t k = 0; k < c; ++k) d[k] += w * s[k];
    }
  }
  Tape& t = tape_of("weighted_aggregate", gamma);
  return t.record("weighted_aggregate", std::move(v), {gamma, z},
                  [&t, graph, ig = gamma.id(), iz = z.id()](const Matrix& g, std::span<Matrix* const> out) {
                    const Matrix& gam = t.value(ig);
                    const Matrix& zz = t.value(iz);
                    const auto o = graph.row_offsets();
                    const auto cl = graph.col_indices();
                    for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
                      auto gi = g.row(i);
                      for (auto e = static_cast<std::size_t>(o[i]); e < static_cast<std::size_t>(o[i + 1]); ++e) {
                        const auto j = static_cast<std::size_t>(cl[e]);
                        if (out[0]) {
                          auto zj = zz.row(j);
                          double acc = 0.0;
                          for (std::size_t k = 0; k < gi.size(); ++k) acc += gi[k] * zj[k];
                          (*out[0])(e, 0) += acc;
                        }
                        if (out[1]) {
                          auto dj = out[1]->row(j);
                          const double w = gam(e, 0);
                          for (std::size_t k = 0; k < gi.size(); ++k) dj[k] += w * gi[k];
                        }
                      }
                    }
                  });
}

Tensor pair_sum_scores(const Graph& graph, const Tensor& z, const Tensor& a, double slope) {
  const Matrix& zv = z.value();
  const Matrix& av = a.value();
  if (zv.rows() != graph.num_nodes())
    throw ShapeError("pair_sum_scores: " + zv.shape_string() + " for " + std::to_string(graph.num_nodes()) + " nodes");
  if (av.rows() != zv.cols() || av.cols() != 1)
    throw ShapeError("pair_sum_scores: attention vector " + av.shape_string() + " for width " + std::to_string(zv.cols()));
  Tape& t = tape_of("pair_sum_scores", z);
  const auto off = graph.row_offsets();
  const auto cols = graph.col_indices();
  const std::size_t c = zv.cols();
  Matrix v(graph.num_entries(), 1);
  for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
    auto zi = zv.row(i);
    for (auto e = static_cast<std::size_t>(off[i]); e < static_cast<std::size_t>(off[i + 1]); ++e) {
      auto zj = zv.row(static_cast<std::size_t>(cols[e]));
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        const double u = zi[k] + zj[k];
        if (t.tracking_kinks()) t.note_kink_bit(u > 0.0);
        s += av(k, 0) * (u > 0.0 ? u : slope * u);
      }
      v(e, 0) = s;
    }
  }
  return t.record("pair_sum_scores", std::move(v), {z, a},
                  [&t, graph, iz = z.id(), ia = a.id(), slope](const Matrix& g, std::span<Matrix* const> out) {
                    const Matrix& zz = t.value(iz);
                    const Matrix& aa = t.value(ia);
                    const auto o = graph.row_offsets();
                    const auto cl = graph.col_indices();
                    for (std::size_t i = 0; i < graph.num_nodes(); ++i) {
                      auto zi = zz.row(i);
                      for (auto e = static_cast<std::size_t>(o[i]); e < static_cast<std::size_t>(o[i + 1]); ++e) {
                        const double ge = g(e, 0);
                        if (ge == 0.0) continue;
                        const auto j = static_cast<std::size_t>(cl[e]);
                        auto zj = zz.row(j);
                        for (std::size_t k = 0; k < zi.size(); ++k) {
                          const double u = zi[k] + zj[k];
                          if (out[1]) (*out[1])(k, 0) += ge * (u > 0.0 ? u : slope * u);
                          if (out[0]) {
                            const double d = ge * aa(k, 0) * (u > 0.0 ? 1.0 : slope);
                            (*out[0])(i, k) += d;
                            (*out[0])(j, k) += d;
                          }
                        }
                      }
                    }
                  });
}

Tensor neighborhood_mean(const Graph& graph, const Tensor& h, const Tensor& lambda2) {
  if (!graph.has_self_loops()) throw GraphError("neighborhood_mean requires self-loops");
  const Matrix& hv = h.value();
  if (hv.rows() != graph.num_nodes())
    throw ShapeError("neighborhood_mean: " + hv.shape_string() + " for " + std::to_string(graph.num_nodes()) + " nodes");
  if (lambda2.value().rows() != 1 || lambda2.value().cols() != 1) throw ShapeError("neighborhood_mean: lambda2 must be 1x1");
  const double lam = lambda2.value().item();
  const std::size_t n = graph.num_nodes();
  const std::size_t c = hv.cols();

  // S_i: neighbor sum without i itself.
  Matrix nsum(n, c);
  const auto off = graph.row_offsets();
  const auto cols = graph.col_indices();
  if (c == 1) {
    const double* h1 = hv.data().data();
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (auto e = off[i]; e < off[i + 1]; ++e) acc += h1[cols[static_cast<std::size_t>(e)]];
      nsum(i, 0) = acc - h1[i];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      auto d = nsum.row(i);
      for (NodeId j : graph.neighbors(i)) {
        if (static_cast<std::size_t>(j) == i) continue;
        auto s = hv.row(static_cast<std::size_t>(j));
        for (std::size_t k = 0; k < c; ++k) d[k] += s[k];
      }
    }
  }
  Matrix v(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    const double di = static_cast<double>(graph.degree(i) - 1);
    const double inv = 1.0 / (1.0 + lam * di);
    for (std::size_t k = 0; k < c; ++k) v(i, k) = (hv(i, k) + lam * nsum(i, k)) * inv;
  }
  Tape& t = tape_of("neighborhood_mean", h);
  const std::size_t self = t.size();
  return t.record(
      "neighborhood_mean", std::move(v), {h, lambda2},
      [&t, self, graph, lam, nsum = std::move(nsum)](const Matrix& g, std::span<Matrix* const> out) {
        const Matrix& y = t.value(self);
        const std::size_t n2 = graph.num_nodes();
        double glam = 0.0;
        for (std::size_t i = 0; i < n2; ++i) {
          const double di = static_cast<double>(graph.degree(i) - 1);
          const double inv = 1.0 / (1.0 + lam * di);
          auto gi = g.row(i);
          if (out[0] && gi.size() == 1) {
            double* d1 = out[0]->data().data();
            const double share = lam * inv * gi[0];
            const auto o = graph.row_offsets();
            const auto cl = graph.col_indices();
            for (auto e = o[i]; e < o[i + 1]; ++e) d1[cl[static_cast<std::size_t>(e)]] += share;
            d1[i] += inv * gi[0] - share;
          } else if (out[0]) {
            auto own = out[0]->row(i);
            for (std::size_t k = 0; k < gi.size(); ++k) own[k] += inv * gi[k];
            for (NodeId j : graph.neighbors(i)) {
              if (static_cast<std::size_t>(j) == i) continue;
              auto dj = out[0]->row(static_cast<std::size_t>(j));
              for (std::size_t k = 0; k < gi.size(); ++k) dj[k] += lam * inv * gi[k];
            }
          }
          if (out[1]) {
            for (std::size_t k = 0; k < gi.size(); ++k) glam += gi[k] * (nsum(i, k) - di * y(i, k)) * inv;
          }
        }
        if (out[1]) (*out[1])(0, 0) += glam;
      });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels, std::span<const std::uint8_t> mask) {
  const Matrix& z = logits.value();
  if (labels.size() != z.rows() || mask.size() != z.rows())
    throw ShapeError("cross_entropy: labels/mask length does not match " + z.shape_string());
  const std::size_t c = z.cols();
  Matrix probs(z.rows(), c);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (!mask[i]) continue;
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw DomainError("cross_entropy: row " + std::to_string(i) + " has label " + std::to_string(y));
    auto zi = z.row(i);
    const double mx = *std::max_element(zi.begin(), zi.end());
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) s += (probs(i, k) = std::exp(zi[k] - mx));
    for (std::size_t k = 0; k < c; ++k) probs(i, k) /= s;
    total += mx + std::log(s) - zi[static_cast<std::size_t>(y)];
    ++count;
  }
  if (count == 0) throw DomainError("cross_entropy: empty mask");
  const double inv = 1.0 / static_cast<double>(count);
  std::vector<int> lab(labels.begin(), labels.end());
  std::vector<std::uint8_t> msk(mask.begin(), mask.end());
  return tape_of("cross_entropy", logits)
      .record("cross_entropy", Matrix::scalar(total * inv), {logits},
              [probs = std::move(probs), lab = std::move(lab), msk = std::move(msk), inv](const Matrix& g,
                                                                                        std::span<Matrix* const> out) {
                const double gv = g.item() * inv;
                Matrix& dst = *out[0];
                for (std::size_t i = 0; i < dst.rows(); ++i) {
                  if (!msk[i]) continue;
                  for (std::size_t k = 0; k < dst.cols(); ++k)
                    dst(i, k) += gv * (probs(i, k) - (static_cast<int>(k) == lab[i] ? 1.0 : 0.0));
                }
              });
}

Tensor binary_cross_entropy(const Tensor& logits, std::span<const double> targets, std::span<const std::uint8_t> mask) {
  const Matrix& z = logits.value();
  if (targets.size() != z.size() || mask.size() != z.rows())
    throw ShapeError("binary_cross_entropy: targets/mask do not match " + z.shape_string());
  Matrix grad(z.rows(), z.cols());
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (!mask[i]) continue;
    for (std::size_t k = 0; k < z.cols(); ++k) {
      const double x = z(i, k);
      const double t = targets[i * z.cols() + k];
      total += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
      const double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      grad(i, k) = sig - t;
      ++count;
    }
  }
  if (count == 0) throw DomainError("binary_cross_entropy: empty mask");
  const double inv = 1.0 / static_cast<double>(count);
  return tape_of("binary_cross_entropy", logits)
      .record("binary_cross_entropy", Matrix::scalar(total * inv), {logits},
              [grad = std::move(grad), inv](const Matrix& g, std::span<Matrix* const> out) {
                const double gv = g.item() * inv;
                auto d = out[0]->data();
                auto s = grad.data();
                for (std::size_t k = 0; k < d.size(); ++k) d[k] += gv * s[k];
              });
}

}  // namespace lcat::ad
