#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lcat/experiment_config.hpp"

namespace lcat {

/// One measurement. Metadata rows (separability thresholds, significance)
/// leave the fields that do not apply empty.
struct ResultRow {
  std::string experiment;
  std::string model;
  std::string grid_name;
  std::optional<double> grid_value;
  std::optional<std::uint64_t> seed;
  std::string metric;
  std::optional<double> value;
  std::vector<double> lambda1_by_layer;
  std::vector<double> lambda2_by_layer;
  std::optional<double> seconds;

  /// Run index used for ordering; not emitted.
  std::size_t run = 0;
};

inline constexpr const char* kResultsCsvHeader =
    "experiment,model,grid_name,grid_value,seed,metric,value,lambda1_by_layer,lambda2_by_layer,seconds";

/// Orders rows by (model, grid value, run, metric).
void sort_rows(std::vector<ResultRow>& rows);

/// 9 significant digits; non-finite values as "inf", "-inf", "nan".
std::string format_number(double v);

/// CSV with the fixed header; lists are ';'-separated, missing values empty.
std::string rows_to_csv(const std::vector<ResultRow>& rows);
/// JSON array of objects with the header's keys; missing values are null.
std::string rows_to_json(const std::vector<ResultRow>& rows);

/// Writes rows in the given format. Throws RuntimeFailure naming the path on I/O errors.
void emit_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path, OutputFormat format);

}  // namespace lcat
