#include <array>
#include <cmath>

#include "ansatz_kernel.hpp"
#include "lcat/error.hpp"
#include "lcat/learned_synthetic.hpp"

namespace lcat::ad {

using detail::AnsatzCoeffs;
using detail::RowKernel;
using detail::RowScratch;
using detail::RowUnits;

Tensor ansatz_aggregate(const Tensor& C, const Tensor& lambda1, const Tensor& lambda2, AnsatzAggregateSpec spec) {
  const Graph& g = spec.graph;
  const std::size_t n = g.num_nodes();
  if (!g.has_self_loops()) throw GraphError("ansatz_aggregate requires self-loops");
  if (!spec.values || spec.values->size() != n) throw ShapeError("ansatz_aggregate: values length does not match node count");
  if (C.value().size() != 1 || lambda1.value().size() != 1 || lambda2.value().size() != 1)
    throw ShapeError("ansatz_aggregate: C, lambda1 and lambda2 must be 1x1");
  if (!(spec.beta >= 0.0 && spec.beta <= 1.0)) throw DomainError("ansatz_aggregate: slope must lie in [0, 1]");
  if (!C.tape()) throw RuntimeFailure("ansatz_aggregate: unbound tensor");
  Tape& tape = *C.tape();

  const double l1 = lambda1.value().item();
  const double l2 = lambda2.value().item();
  const AnsatzCoeffs co = AnsatzCoeffs::from(spec.mu_norm, spec.R, C.value().item(), spec.beta);
  const auto off = g.row_offsets();
  const auto cols = g.col_indices();
  const double* x = spec.values->data();

  // Score inputs s and their lambda2-derivative m.
  std::vector<double> s(n), m(n);
  for (std::size_t i = 0; i < n; ++i) {
    double nsum = 0.0;
    for (auto e = off[i]; e < off[i + 1]; ++e) nsum += x[cols[static_cast<std::size_t>(e)]];
    nsum -= x[i];
    const double d = static_cast<double>(off[i + 1] - off[i] - 1);
    const double inv = 1.0 / (1.0 + l2 * d);
    s[i] = (x[i] + l2 * nsum) * inv;
    m[i] = (nsum - d * s[i]) * inv;
  }

  const bool need_grad = tape.requires_grad(C.id()) || tape.requires_grad(lambda1.id()) || tape.requires_grad(lambda2.id());
  const bool kinks = tape.tracking_kinks();
  const RowKernel kernel(co, l1, s, g);
  Matrix out(n, 1);
  auto jac = std::make_shared<std::vector<std::array<double, 3>>>(need_grad ? n : 0);
  std::vector<double> w;
  RowScratch scratch;

  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = static_cast<std::size_t>(off[i]);
    const std::size_t len = static_cast<std::size_t>(off[i + 1]) - lo;
    if (w.size() < len) w.resize(len);
    scratch.reserve(len);
    const RowUnits u(co, s[i]);
    const NodeId* nb = cols.data() + lo;
    const double z = kernel.weights(u, nb, len, w.data(), scratch);
    double acc = 0.0;
    for (std::size_t k = 0; k < len; ++k) acc += w[k] * x[nb[k]];
    const double ai = acc / z;
    out(i, 0) = ai;
    if (need_grad) {
      const auto t = kernel.row_jacobian(nb, len, x, m.data(), w.data(), ai, scratch);
      // t = {sum u psi, sum u dPsi/dC, sum u dPsi/ds_i, sum u dPsi/ds_j m_j} with u_k = w_k (x_j - a_i).
      (*jac)[i] = {l1 * t[1] / z, t[0] / z, l1 * (m[i] * t[2] + t[3]) / z};
    }
    if (kinks)
      for (std::size_t k = 0; k < len; ++k) {
        const std::uint8_t bits = u.kink_bits(scratch.x[k]);
        for (std::size_t b = 0; b < 8; ++b) tape.note_kink_bit(((bits >> b) & 1U) != 0);
      }
  }

  return tape.record("ansatz_aggregate", std::move(out), {C, lambda1, lambda2},
                     [jac](const Matrix& grad, std::span<Matrix* const> outs) {
                       std::array<double, 3> total{};
                       for (std::size_t i = 0; i < jac->size(); ++i)
                         for (std::size_t p = 0; p < 3; ++p) total[p] += grad(i, 0) * (*jac)[i][p];
                       for (std::size_t p = 0; p < 3; ++p)
                         if (outs[p]) (*outs[p])(0, 0) += total[p];
                     });
}

}  // namespace lcat::ad
