#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "lcat/matrix.hpp"

namespace lcat {

enum class Metric { kAccuracy, kAucRoc };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

/// Fraction of masked rows whose argmax equals the label. A single-column
/// score matrix is a binary logit: class 1 iff score > 0.
double accuracy(const Matrix& scores, std::span<const int> labels, std::span<const std::uint8_t> mask);

/// P(score_pos > score_neg) + P(tie) / 2 over masked rows. Multi-column scores
/// average one-vs-rest AUC over classes present as both positive and negative.
/// nullopt when no task has both classes.
std::optional<double> auc_roc(const Matrix& scores, std::span<const int> labels, std::span<const std::uint8_t> mask);

std::optional<double> evaluate_metric(const Matrix& scores, std::span<const int> labels,
                                      std::span<const std::uint8_t> mask, Metric metric);

}  // namespace lcat
