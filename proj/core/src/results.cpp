#include "lcat/results.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <tuple>

#include <json.hpp>

#include "lcat/error.hpp"

namespace lcat {

void sort_rows(std::vector<ResultRow>& rows) {
  const auto key = [](const ResultRow& r) {
    return std::make_tuple(r.model, r.grid_name, r.grid_value.has_value(), r.grid_value.value_or(0.0), r.run,
                           r.seed.has_value(), r.metric);
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const ResultRow& a, const ResultRow& b) { return key(a) < key(b); });
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ';';
    out += format_number(v[k]);
  }
  return out;
}

// Numbers go through the same 9-digit formatting as the CSV.
nlohmann::ordered_json num(double v) {
  if (!std::isfinite(v)) return format_number(v);
  return nlohmann::ordered_json::parse(format_number(v));
}

}  // namespace

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kResultsCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += csv_field(r.experiment) + ',' + csv_field(r.model) + ',' + csv_field(r.grid_name) + ',';
    out += (r.grid_value ? format_number(*r.grid_value) : "") + ',';
    out += (r.seed ? std::to_string(*r.seed) : "") + ',';
    out += csv_field(r.metric) + ',';
    out += (r.value ? format_number(*r.value) : "") + ',';
    out += join(r.lambda1_by_layer) + ',' + join(r.lambda2_by_layer) + ',';
    out += (r.seconds ? format_number(*r.seconds) : "") + '\n';
  }
  return out;
}

std::string rows_to_json(const std::vector<ResultRow>& rows) {
  using json = nlohmann::ordered_json;
  json arr = json::array();
  for (const auto& r : rows) {
    json l1 = json::array(), l2 = json::array();
    for (double v : r.lambda1_by_layer) l1.push_back(num(v));
    for (double v : r.lambda2_by_layer) l2.push_back(num(v));
    json o = json::object();
    o["experiment"] = r.experiment;
    o["model"] = r.model;
    o["grid_name"] = r.grid_name;
    o["grid_value"] = r.grid_value ? num(*r.grid_value) : json(nullptr);
    o["seed"] = r.seed ? json(*r.seed) : json(nullptr);
    o["metric"] = r.metric;
    o["value"] = r.value ? num(*r.value) : json(nullptr);
    o["lambda1_by_layer"] = l1;
    o["lambda2_by_layer"] = l2;
    o["seconds"] = r.seconds ? num(*r.seconds) : json(nullptr);
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

void emit_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path, OutputFormat format) {
  const std::string text = format == OutputFormat::kCsv ? rows_to_csv(rows) : rows_to_json(rows);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw RuntimeFailure("failed writing " + path.string());
}

}  // namespace lcat
