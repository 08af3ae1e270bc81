#include "ansatz_kernel.hpp"

#include <bit>
#include <limits>

// Built with -fno-trapping-math so the selects below vectorize, and -ffp-contract=off so
// every clone rounds identically.
#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__)
#define LCAT_KERNEL_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define LCAT_KERNEL_CLONES
#endif

namespace lcat::detail {
namespace {

// Rows shorter than this skip the factored path; its per-row setup costs about this much.
constexpr std::size_t kMinFactoredDegree = 96;
// Factored weights are products of two terms in (0, 1]; below this the row is recomputed directly.
constexpr double kMinFactoredSum = 1e-200;

// exp for x <= 0 via 2^k * P(r), |r| <= ln2/2, degree-12 Taylor; below -700 returns 0.
inline double exp_nonpositive(double x) noexcept {
  constexpr double kShift = 0x1.8p52;
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 0x1.62e42fefa3800p-1;
  constexpr double kLn2Lo = 0x1.ef35793c76730p-45;
  const double xc = x > -700.0 ? x : -700.0;
  const double kd = xc * kLog2e + kShift;
  const double k = kd - kShift;
  const double r = (xc - k * kLn2Hi) - k * kLn2Lo;
  double p = 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;
  const std::uint64_t scale = (std::bit_cast<std::uint64_t>(kd) + 1023U) << 52;
  const double res = p * std::bit_cast<double>(scale);
  return x > -700.0 ? res : 0.0;
}

// Four interleaved partial sums combined pairwise; the order is fixed by the source,
// so every clone produces the same bits.
inline double lane_sum(const double* v, std::size_t len) noexcept {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4)
    for (std::size_t l = 0; l < 4; ++l) acc[l] += v[k + l];
  for (std::size_t l = 0; k < len; ++k, ++l) acc[l] += v[k];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

LCAT_KERNEL_CLONES void gather_patterns(const double* s, const NodeId* nb, std::size_t len,
                                        const std::array<double, 8>& a, double* x, std::int32_t* pattern) noexcept {
  for (std::size_t k = 0; k < len; ++k) x[k] = s[nb[k]];
  for (std::size_t k = 0; k < len; ++k) {
    const double v = x[k];
    pattern[k] = static_cast<std::int32_t>(a[0] + v > 0.0) | static_cast<std::int32_t>(a[1] - v > 0.0) << 1 |
                 static_cast<std::int32_t>(a[2] - v > 0.0) << 2 | static_cast<std::int32_t>(a[3] + v > 0.0) << 3 |
                 static_cast<std::int32_t>(a[4] + v > 0.0) << 4 | static_cast<std::int32_t>(a[6] - v > 0.0) << 5;
  }
}

LCAT_KERNEL_CLONES void exp_shifted(const double* in, double scale, double shift, std::size_t len,
                                    double* out) noexcept {
  for (std::size_t k = 0; k < len; ++k) out[k] = exp_nonpositive(scale * in[k] - shift);
}

LCAT_KERNEL_CLONES void factored_weights(const double* row, const double* col, std::size_t n, const std::int32_t* pat,
                                         const NodeId* nb, std::size_t len, double* w) noexcept {
  for (std::size_t k = 0; k < len; ++k)
    w[k] = row[pat[k]] * col[static_cast<std::size_t>(pat[k]) * n + static_cast<std::size_t>(nb[k])];
}

LCAT_KERNEL_CLONES std::array<double, 4> jacobian_sums(const double* intercept, const double* dxj, const double* dxi,
                                                      const double* dc, const std::int32_t* pat, const double* x,
                                                      const NodeId* nb, std::size_t len, const double* v,
                                                      const double* m, const double* w, double a,
                                                      double* scratch) noexcept {
  double* t0 = scratch;
  double* t1 = scratch + len;
  double* t2 = scratch + 2 * len;
  double* t3 = scratch + 3 * len;
  for (std::size_t k = 0; k < len; ++k) {
    const auto j = static_cast<std::size_t>(nb[k]);
    const std::int32_t p = pat[k];
    const double uk = w[k] * (v[j] - a);
    t0[k] = uk * (intercept[p] + dxj[p] * x[k]);
    t1[k] = uk * dc[p];
    t2[k] = uk * dxi[p];
    t3[k] = uk * dxj[p] * m[j];
  }
  return {lane_sum(t0, len), lane_sum(t1, len), lane_sum(t2, len), lane_sum(t3, len)};
}

}  // namespace

RowKernel::RowKernel(const AnsatzCoeffs& c, double scale, std::span<const double> s, const Graph& g)
    : c_(c), scale_(scale), s_(s) {
  for (std::size_t p = 0; p < kPatterns; ++p) {
    for (std::size_t v = 0; v < kVarying.size(); ++v) {
      const std::size_t t = kVarying[v];
      const double d = c.r[t] * (((p >> v) & 1U) != 0 ? 1.0 : c.beta);
      slope_[p][v] = d;
      dxj_[p] += d * RowUnits::sj[t];
      dxi_[p] += d * RowUnits::si[t];
      dc_[p] += d * c.db[t];
    }
  }
  const std::size_t n = g.num_nodes();
  if (n == 0 || g.num_entries() < kMinFactoredDegree * n) return;
  col_.resize(kPatterns * n);
  for (std::size_t p = 0; p < kPatterns; ++p) {
    double* cp = col_.data() + p * n;
    const double slope = scale * dxj_[p];
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      cp[j] = slope * s[j];
      mx = cp[j] > mx ? cp[j] : mx;
    }
    col_shift_[p] = mx;
    exp_shifted(cp, 1.0, mx, n, cp);
  }
}

double RowKernel::direct(const RowUnits& u, std::size_t len, double* w, const RowScratch& scratch) const {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < len; ++k) {
    w[k] = u.score(c_, scratch.x[k]);
    const double v = scale_ * w[k];
    mx = v > mx ? v : mx;
  }
  exp_shifted(w, scale_, mx, len, w);
  return lane_sum(w, len);
}

double RowKernel::weights(const RowUnits& u, const NodeId* nb, std::size_t len, double* w, RowScratch& scratch) const {
  gather_patterns(s_.data(), nb, len, u.a, scratch.x.data(), scratch.pattern.data());
  auto& A = scratch.intercept;
  for (std::size_t p = 0; p < kPatterns; ++p) {
    double v = u.fixed;
    for (std::size_t q = 0; q < kVarying.size(); ++q) v += slope_[p][q] * u.a[kVarying[q]];
    A[p] = v;
  }
  if (col_.empty() || len < kMinFactoredDegree) return direct(u, len, w, scratch);

  std::array<double, kPatterns> row{};
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < kPatterns; ++p) {
    row[p] = scale_ * A[p] + col_shift_[p];
    shift = row[p] > shift ? row[p] : shift;
  }
  exp_shifted(row.data(), 1.0, shift, kPatterns, row.data());
  factored_weights(row.data(), col_.data(), s_.size(), scratch.pattern.data(), nb, len, w);
  const double z = lane_sum(w, len);
  return z >= kMinFactoredSum ? z : direct(u, len, w, scratch);
}

std::array<double, 4> RowKernel::row_jacobian(const NodeId* nb, std::size_t len, const double* v, const double* m,
                                              const double* w, double a, RowScratch& scratch) const {
  return jacobian_sums(scratch.intercept.data(), dxj_.data(), dxi_.data(), dc_.data(), scratch.pattern.data(),
                       scratch.x.data(), nb, len, v, m, w, a, scratch.terms.data());
}

}  // namespace lcat::detail
