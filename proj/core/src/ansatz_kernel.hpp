#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lcat/ansatz.hpp"
#include "lcat/graph.hpp"

// Shared row kernel of the ansatz score on projected inputs. For a fixed x_i
// the eight hidden pre-activations are z_t = a_t + sj_t x_j; units 5 and 7 do
// not depend on x_j. Inside a row the score is linear in x_j between kinks, so
// each neighbor is classified by the 6-bit activation pattern of the varying
// units and exp(scale * score) factors into a row term and a column term.
namespace lcat::detail {

struct AnsatzCoeffs {
  std::array<double, 8> r{};
  std::array<double, 8> b{};
  std::array<double, 8> db{};  // dz_t / dC
  double beta = 0.0;

  static AnsatzCoeffs from(double mu_norm, double R, double C, double beta) {
    AnsatzCoeffs c;
    c.beta = beta;
    for (std::size_t t = 0; t < 8; ++t) {
      c.r[t] = R * AnsatzParams::kOutputPattern[t];
      c.db[t] = mu_norm * AnsatzParams::kBiasPattern[t];
      c.b[t] = C * c.db[t];
    }
    return c;
  }
};

struct RowUnits {
  static constexpr std::array<double, 8> sj{1, -1, -1, 1, 1, 0, -1, 0};
  static constexpr std::array<double, 8> si{1, -1, 1, -1, 0, 1, 0, -1};
  std::array<double, 8> a{};
  double fixed = 0.0;  // r_5 L(a_5) + r_7 L(a_7)

  RowUnits(const AnsatzCoeffs& c, double xi) noexcept {
    for (std::size_t t = 0; t < 8; ++t) a[t] = si[t] * xi + c.b[t];
    fixed = c.r[5] * leaky(a[5], c.beta) + c.r[7] * leaky(a[7], c.beta);
  }

  // Valid for beta in [0, 1].
  static double leaky(double z, double beta) noexcept { return std::max(z, beta * z); }

  [[nodiscard]] double score(const AnsatzCoeffs& c, double xj) const noexcept {
    const double be = c.beta;
    return fixed + c.r[0] * leaky(a[0] + xj, be) + c.r[1] * leaky(a[1] - xj, be) + c.r[2] * leaky(a[2] - xj, be) +
           c.r[3] * leaky(a[3] + xj, be) + c.r[4] * leaky(a[4] + xj, be) + c.r[6] * leaky(a[6] - xj, be);
  }

  /// Sign bits of all eight pre-activations for neighbor value xj.
  [[nodiscard]] std::uint8_t kink_bits(double xj) const noexcept {
    unsigned bits = 0;
    for (std::size_t t = 0; t < 8; ++t) bits |= static_cast<unsigned>(a[t] + sj[t] * xj > 0.0) << t;
    return static_cast<std::uint8_t>(bits);
  }
};

struct RowScratch {
  std::vector<double> x;
  std::vector<std::int32_t> pattern;
  std::vector<double> terms;
  std::array<double, 64> intercept{};  // Psi = intercept[p] + slope[p] x_j on pattern p
  void reserve(std::size_t len) {
    if (x.size() < len) {
      x.resize(len);
      pattern.resize(len);
      terms.resize(4 * len);
    }
  }
};

/// Unnormalized softmax weights of scale * Psi(s_i, s_j) over rows of one graph.
class RowKernel {
 public:
  static constexpr std::size_t kPatterns = 64;
  static constexpr std::array<std::size_t, 6> kVarying{0, 1, 2, 3, 4, 6};

  RowKernel(const AnsatzCoeffs& c, double scale, std::span<const double> s, const Graph& g);

  /// w[k] = exp(scale * Psi_ik - shift_i) for neighbors nb; returns their sum.
  /// Afterwards scratch.x and scratch.pattern hold x_j and the activation
  /// pattern of each neighbor, and scratch.intercept the row's intercepts.
  double weights(const RowUnits& u, const NodeId* nb, std::size_t len, double* w, RowScratch& scratch) const;

  /// Sums over the row of u_k = w_k (v_j - a) times Psi, dPsi/dC, dPsi/ds_i and
  /// dPsi/ds_j m_j, using the state left by the last weights() call. Units
  /// constant along the row are left out: their terms cancel in the softmax.
  std::array<double, 4> row_jacobian(const NodeId* nb, std::size_t len, const double* v, const double* m,
                                     const double* w, double a, RowScratch& scratch) const;

  [[nodiscard]] const AnsatzCoeffs& coeffs() const noexcept { return c_; }

 private:
  double direct(const RowUnits& u, std::size_t len, double* w, const RowScratch& scratch) const;

  AnsatzCoeffs c_;
  double scale_;
  std::span<const double> s_;
  std::array<double, kPatterns> dxj_{};
  std::array<double, kPatterns> dxi_{};
  std::array<double, kPatterns> dc_{};
  std::array<std::array<double, 6>, kPatterns> slope_{};  // r_t * L'(pattern) per varying unit
  std::array<double, kPatterns> col_shift_{};
  std::vector<double> col_;  // kPatterns x n; empty when every row takes the direct path
};

/// Row softmax of scale * Psi(s_i, s_j) over N*_i. Calls emit(i, begin, gammas).
template <typename Emit>
void ansatz_softmax_rows(const Graph& g, const double* s, const AnsatzCoeffs& c, double scale,
                         std::vector<double>& buf, Emit&& emit) {
  const auto off = g.row_offsets();
  const auto cols = g.col_indices();
  const RowKernel kernel(c, scale, std::span<const double>(s, g.num_nodes()), g);
  RowScratch scratch;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    const auto lo = static_cast<std::size_t>(off[i]);
    const std::size_t len = static_cast<std::size_t>(off[i + 1]) - lo;
    if (buf.size() < len) buf.resize(len);
    scratch.reserve(len);
    double* gb = buf.data();
    const double inv = 1.0 / kernel.weights(RowUnits(c, s[i]), cols.data() + lo, len, gb, scratch);
    for (std::size_t k = 0; k < len; ++k) gb[k] *= inv;
    emit(i, lo, std::span<const double>(gb, len));
  }
}

}  // namespace lcat::detail
