#include "lcat/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "lcat/error.hpp"

namespace lcat {

std::string_view to_string(Metric m) { return m == Metric::kAccuracy ? "accuracy" : "auc_roc"; }

Metric parse_metric(std::string_view s) {
  if (s == "accuracy") return Metric::kAccuracy;
  if (s == "auc_roc" || s == "auc") return Metric::kAucRoc;
  throw ConfigError("unknown metric '" + std::string(s) + "' (expected accuracy or auc_roc)");
}

namespace {

void check_inputs(const Matrix& scores, std::span<const int> labels, std::span<const std::uint8_t> mask) {
  if (labels.size() != scores.rows() || mask.size() != scores.rows())
    throw ShapeError("metric: labels/mask length does not match " + scores.shape_string());
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }))
    throw DomainError("metric: empty mask");
}

// Rank-statistic AUC for one binary task.
std::optional<double> binary_auc(std::vector<std::pair<double, bool>> pts) {
  std::size_t pos = 0;
  for (const auto& p : pts) pos += p.second;
  const std::size_t neg = pts.size() - pos;
  if (pos == 0 || neg == 0) return std::nullopt;
  std::sort(pts.begin(), pts.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  double wins = 0.0;
  std::size_t neg_below = 0;
  for (std::size_t i = 0; i < pts.size();) {
    std::size_t j = i;
    std::size_t tie_pos = 0, tie_neg = 0;
    while (j < pts.size() && pts[j].first == pts[i].first) {
      (pts[j].second ? tie_pos : tie_neg)++;
      ++j;
    }
    wins += static_cast<double>(tie_pos) * (static_cast<double>(neg_below) + 0.5 * static_cast<double>(tie_neg));
    neg_below += tie_neg;
    i = j;
  }
  return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace

double accuracy(const Matrix& scores, std::span<const int> labels, std::span<const std::uint8_t> mask) {
  check_inputs(scores, labels, mask);
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    if (!mask[i]) continue;
    int pred = 0;
    if (scores.cols() == 1) {
      pred = scores(i, 0) > 0.0 ? 1 : 0;
    } else {
      auto r = scores.row(i);
      pred = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    correct += pred == labels[i];
    ++total;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::optional<double> auc_roc(const Matrix& scores, std::span<const int> labels, std::span<const std::uint8_t> mask) {
  check_inputs(scores, labels, mask);
  const std::size_t tasks = scores.cols() == 1 ? 1 : scores.cols();
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < tasks; ++k) {
    std::vector<std::pair<double, bool>> pts;
    const int positive = scores.cols() == 1 ? 1 : static_cast<int>(k);
    for (std::size_t i = 0; i < scores.rows(); ++i)
      if (mask[i]) pts.emplace_back(scores(i, k), labels[i] == positive);
    if (auto a = binary_auc(std::move(pts))) {
      sum += *a;
      ++used;
    }
  }
  if (used == 0) return std::nullopt;
  return sum / static_cast<double>(used);
}

std::optional<double> evaluate_metric(const Matrix& scores, std::span<const int> labels,
                                      std::span<const std::uint8_t> mask, Metric metric) {
  if (metric == Metric::kAccuracy) return accuracy(scores, labels, mask);
  return auc_roc(scores, labels, mask);
}

}  // namespace lcat
