#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lcat/graph.hpp"
#include "lcat/matrix.hpp"

// Minimal reverse-mode differentiation over dense matrices and CSR-segmented
// reductions. A Tape records primitive applications in order; backward() walks
// them in exact reverse order, accumulating gradients additively at fan-out.
// Tapes are single-use: record, one backward, discard.
namespace lcat::ad {

/// Trainable value that outlives tapes. Identity is its address, so a
/// Parameter must not move while tapes or optimizers refer to it.
struct Parameter {
  std::string name;
  Matrix value;
};

class Tape;

/// Handle to a value recorded on a tape.
class Tensor {
 public:
  Tensor() = default;
  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] std::size_t rows() const { return value().rows(); }
  [[nodiscard]] std::size_t cols() const { return value().cols(); }
  [[nodiscard]] bool requires_grad() const;
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }
  [[nodiscard]] std::size_t id() const noexcept { return id_; }
  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* t, std::size_t id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Backward rule: receives dL/d(output) and one slot per input; slots of
/// inputs that do not require gradients are nullptr. Rules must add into the
/// slots, never overwrite them.
using BackwardFn = std::function<void(const Matrix& grad_out, std::span<Matrix* const> grad_inputs)>;

class Gradients {
 public:
  [[nodiscard]] const Matrix& of(const Parameter& p) const;
  [[nodiscard]] bool contains(const Parameter& p) const { return grads_.contains(&p); }
  [[nodiscard]] std::size_t size() const noexcept { return grads_.size(); }
  [[nodiscard]] const std::unordered_map<const Parameter*, Matrix>& all() const noexcept { return grads_; }

 private:
  friend class Tape;
  std::unordered_map<const Parameter*, Matrix> grads_;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  Tensor constant_scalar(double v) { return constant(Matrix::scalar(v)); }
  /// Leaf bound to `p`; repeated calls return the same node.
  Tensor parameter(Parameter& p);

  /// Records a primitive; callers validate shapes before computing `value`.
  Tensor record(std::string_view op, Matrix value, std::vector<Tensor> inputs, BackwardFn backward);

  /// Gradients of the scalar `loss` for every parameter bound to this tape
  /// (zero for parameters the loss does not depend on). Consumes the tape.
  Gradients backward(const Tensor& loss);

  [[nodiscard]] const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
  [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] bool consumed() const noexcept { return consumed_; }
  [[nodiscard]] std::string_view op_name(std::size_t id) const { return nodes_.at(id).op; }

  /// Kink tracking for finite-difference checks: piecewise-linear primitives
  /// fold the sign pattern of their inputs into a running signature.
  void set_track_kinks(bool on) noexcept { track_kinks_ = on; }
  [[nodiscard]] bool tracking_kinks() const noexcept { return track_kinks_; }
  void note_kinks(std::span<const double> pre_activation) noexcept;
  void note_kink_bit(bool positive) noexcept;
  [[nodiscard]] std::uint64_t kink_signature() const noexcept { return kink_signature_; }

 private:
  struct Node {
    std::string_view op;
    Matrix value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    Parameter* param = nullptr;
  };
  void check_open(std::string_view op) const;

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  bool consumed_ = false;
  bool track_kinks_ = false;
  std::uint64_t kink_signature_ = 0xcbf29ce484222325ULL;
};

// ---- Dense primitives -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
/// x + bias broadcast over rows; bias is 1 x cols.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);
Tensor scale(const Tensor& x, double factor);
/// s * x with s a 1x1 tensor.
Tensor scale_by(const Tensor& s, const Tensor& x);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor concat_cols(std::span<const Tensor> parts);
/// Rows [begin, begin + count) of x.
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
/// Element-wise mean of equally shaped tensors.
Tensor average(std::span<const Tensor> parts);
/// max(x, slope x) for slope in [0, 1); derivative at exactly 0 is `slope`.
Tensor leaky_relu(const Tensor& x, double slope);
/// PReLU with a single learnable slope (1x1 tensor).
Tensor prelu(const Tensor& x, const Tensor& slope);
Tensor sigmoid(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// ---- Graph-segmented primitives ---------------------------------------------

/// out[e] = x[index[e]].
Tensor gather_rows(const Tensor& x, std::shared_ptr<const std::vector<NodeId>> index);
/// out[i] = sum of x rows in [offsets[i], offsets[i+1]).
Tensor segment_sum(const Tensor& x, const Graph& graph);
/// Softmax of each column within every CSR row segment.
Tensor segment_softmax(const Tensor& scores, const Graph& graph);
/// out[e, :] = x[e, :] * w[e] with w an E x 1 tensor.
Tensor row_scale(const Tensor& x, const Tensor& w);
/// out_i = sum over entries e = (i, j) of gamma[e] * z_j; gamma is E x 1.
Tensor weighted_aggregate(const Graph& graph, const Tensor& gamma, const Tensor& z);
/// score[e] = a^T LeakyReLU(z_i + z_j) for every entry e = (i, j); a is cols x 1.
Tensor pair_sum_scores(const Graph& graph, const Tensor& z, const Tensor& a, double slope);
/// (h_i + l2 sum_{N_i} h) / (1 + l2 |N_i|) with a 1x1 lambda2 tensor.
Tensor neighborhood_mean(const Graph& graph, const Tensor& h, const Tensor& lambda2);

// ---- Losses -----------------------------------------------------------------

/// Mean softmax cross-entropy over rows with mask[i] != 0.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels, std::span<const std::uint8_t> mask);
/// Mean binary cross-entropy with logits over masked rows; targets in [0, 1],
/// one per element of the masked rows (n x T logits, row-major targets).
Tensor binary_cross_entropy(const Tensor& logits, std::span<const double> targets,
                            std::span<const std::uint8_t> mask);

}  // namespace lcat::ad
