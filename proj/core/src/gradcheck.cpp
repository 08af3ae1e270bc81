#include "lcat/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lcat/error.hpp"

namespace lcat::ad {
namespace {

struct Eval {
  double value;
  std::uint64_t kinks;
};

Eval evaluate(const LossBuilder& f) {
  Tape tape;
  tape.set_track_kinks(true);
  const double v = f(tape).value().item();
  if (!std::isfinite(v)) throw RuntimeFailure("finite_difference_check: loss is not finite");
  return {v, tape.kink_signature()};
}

}  // namespace

FdCheckResult finite_difference_check(const LossBuilder& f, std::span<Parameter* const> params, double step) {
  if (!(step > 0.0)) throw DomainError("finite_difference_check: step must be > 0");
  Gradients grads;
  std::uint64_t base_kinks = 0;
  {
    Tape tape;
    tape.set_track_kinks(true);
    for (auto* p : params) tape.parameter(*p);
    const Tensor loss = f(tape);
    if (!std::isfinite(loss.value().item())) throw RuntimeFailure("finite_difference_check: loss is not finite");
    base_kinks = tape.kink_signature();
    grads = tape.backward(loss);
  }
  FdCheckResult out;
  for (auto* p : params) {
    const Matrix& g = grads.of(*p);
    auto theta = p->value.data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double saved = theta[k];
      theta[k] = saved + step;
      const Eval plus = evaluate(f);
      theta[k] = saved - step;
      const Eval minus = evaluate(f);
      theta[k] = saved;
      if (plus.kinks != base_kinks || minus.kinks != base_kinks) {
        ++out.excluded;
        continue;
      }
      const double fd = (plus.value - minus.value) / (2.0 * step);
      const double a = g.data()[k];
      const double rel = std::abs(a - fd) / std::max(1.0, std::abs(a));
      ++out.checked;
      if (rel > out.max_rel_error || out.worst.empty()) {
        out.max_rel_error = std::max(out.max_rel_error, rel);
        if (rel >= out.max_rel_error) out.worst = p->name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return out;
}

}  // namespace lcat::ad
