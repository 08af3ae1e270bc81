#include <cmath>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "lcat/error.hpp"
#include "lcat/results.hpp"
#include "test_support.hpp"

using namespace lcat;
using nlohmann::json;

namespace {

// Draft-07 subset used by the shipped schema: type, required, properties,
// additionalProperties, items, minimum, maximum, minLength, pattern.
bool type_matches(const json& v, const std::string& t) {
  if (t == "null") return v.is_null();
  if (t == "string") return v.is_string();
  if (t == "number") return v.is_number();
  if (t == "integer") return v.is_number_integer() || v.is_number_unsigned();
  if (t == "array") return v.is_array();
  if (t == "object") return v.is_object();
  if (t == "boolean") return v.is_boolean();
  return false;
}

void validate(const json& v, const json& schema, const std::string& path, std::vector<std::string>& errors) {
  if (schema.contains("type")) {
    std::vector<std::string> types;
    if (schema["type"].is_string()) types.push_back(schema["type"]);
    else
      for (const auto& t : schema["type"]) types.push_back(t);
    bool ok = false;
    for (const auto& t : types) ok = ok || type_matches(v, t);
    if (!ok) errors.push_back(path + ": type");
  }
  if (v.is_number()) {
    if (schema.contains("minimum") && v.get<double>() < schema["minimum"].get<double>()) errors.push_back(path + ": minimum");
    if (schema.contains("maximum") && v.get<double>() > schema["maximum"].get<double>()) errors.push_back(path + ": maximum");
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (schema.contains("minLength") && s.size() < schema["minLength"].get<std::size_t>()) errors.push_back(path + ": minLength");
    if (schema.contains("pattern") && !std::regex_search(s, std::regex(schema["pattern"].get<std::string>())))
      errors.push_back(path + ": pattern");
  }
  if (v.is_object()) {
    if (schema.contains("required"))
      for (const auto& k : schema["required"])
        if (!v.contains(k.get<std::string>())) errors.push_back(path + ": missing " + k.get<std::string>());
    const json props = schema.value("properties", json::object());
    for (const auto& [k, sub] : v.items()) {
      if (props.contains(k)) validate(sub, props[k], path + "." + k, errors);
      else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false)
        errors.push_back(path + ": unexpected " + k);
    }
  }
  if (v.is_array() && schema.contains("items"))
    for (std::size_t i = 0; i < v.size(); ++i) validate(v[i], schema["items"], path + "[" + std::to_string(i) + "]", errors);
}

// RFC 4180 fields, enough for the result files.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(field);
      field.clear();
    } else if (c == '\n') {
      row.push_back(field);
      field.clear();
      rows.push_back(row);
      row.clear();
    } else {
      field += c;
    }
  }
  return rows;
}

ResultRow sample_row() {
  ResultRow r;
  r.experiment = "synthetic, fixed";
  r.model = "LCAT";
  r.grid_name = "q";
  r.grid_value = 0.15;
  r.seed = 18446744073709551615ull;
  r.metric = "accuracy";
  r.value = 2.0 / 3.0;
  r.lambda1_by_layer = {0.25, 1.0 / 3.0};
  r.lambda2_by_layer = {0.5, 0.125};
  return r;
}

json load_schema() {
  std::ifstream in(LCAT_SCHEMA_PATH);
  EXPECT_TRUE(in.good()) << LCAT_SCHEMA_PATH;
  return json::parse(in);
}

}  // namespace

TEST(Results, EmptyRowsGiveHeaderOnlyCsv) {
  EXPECT_EQ(rows_to_csv({}), std::string(kResultsCsvHeader) + "\n");
  EXPECT_EQ(std::string(kResultsCsvHeader),
            "experiment,model,grid_name,grid_value,seed,metric,value,lambda1_by_layer,lambda2_by_layer,seconds");
}

TEST(Results, FormatNumberUsesNineSignificantDigits) {
  EXPECT_EQ(format_number(2.0 / 3.0), "0.666666667");
  EXPECT_EQ(format_number(123456789.4), "123456789");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Results, SingleRowRoundTripsThroughCsvParser) {
  const ResultRow r = sample_row();
  const auto rows = parse_csv(rows_to_csv({r}));
  ASSERT_EQ(rows.size(), 2u);
  ASSERT_EQ(rows[1].size(), 10u);
  EXPECT_EQ(rows[1][0], r.experiment);
  EXPECT_EQ(rows[1][1], r.model);
  EXPECT_EQ(rows[1][2], r.grid_name);
  EXPECT_EQ(std::stod(rows[1][3]), 0.15);
  EXPECT_EQ(std::stoull(rows[1][4]), *r.seed);
  EXPECT_EQ(rows[1][5], r.metric);
  EXPECT_NEAR(std::stod(rows[1][6]), *r.value, 5e-10);
  EXPECT_EQ(rows[1][7], "0.25;0.333333333");
  EXPECT_EQ(rows[1][8], "0.5;0.125");
  EXPECT_EQ(rows[1][9], "");
}

TEST(Results, MissingValuesAreEmptyFields) {
  ResultRow r;
  r.metric = "threshold_cat";
  const auto rows = parse_csv(rows_to_csv({r}));
  ASSERT_EQ(rows[1].size(), 10u);
  for (std::size_t k : {0u, 1u, 2u, 3u, 4u, 6u, 7u, 8u, 9u}) EXPECT_EQ(rows[1][k], "") << k;
}

TEST(Results, JsonValidatesAgainstShippedSchema) {
  const json schema = load_schema();
  ResultRow missing;
  missing.metric = "p_vs_GAT";
  ResultRow infinite = sample_row();
  infinite.value = std::numeric_limits<double>::infinity();
  infinite.seconds = 0.25;
  const json doc = json::parse(rows_to_json({sample_row(), missing, infinite}));
  std::vector<std::string> errors;
  validate(doc, schema, "$", errors);
  EXPECT_TRUE(errors.empty()) << errors.front();
  EXPECT_EQ(doc[2]["value"], "inf");
  EXPECT_TRUE(doc[1]["seed"].is_null());
}

TEST(Results, SchemaRejectsMalformedRows) {
  const json schema = load_schema();
  json doc = json::parse(rows_to_json({sample_row()}));
  doc[0]["extra"] = 1;
  doc[0]["lambda1_by_layer"][0] = 1.5;
  doc[0].erase("metric");
  std::vector<std::string> errors;
  validate(doc, schema, "$", errors);
  EXPECT_EQ(errors.size(), 3u);
}

TEST(Results, SortOrdersByModelGridRunMetric) {
  std::vector<ResultRow> rows;
  for (std::string m : {"LCAT", "GAT"})
    for (double g : {0.5, 0.1})
      for (std::size_t run : {1u, 0u})
        for (std::string metric : {"b", "a"}) {
          ResultRow r;
          r.model = m;
          r.grid_value = g;
          r.run = run;
          r.metric = metric;
          rows.push_back(r);
        }
  sort_rows(rows);
  EXPECT_EQ(rows.front().model, "GAT");
  EXPECT_EQ(*rows.front().grid_value, 0.1);
  EXPECT_EQ(rows.front().run, 0u);
  EXPECT_EQ(rows.front().metric, "a");
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& a = rows[k - 1];
    const auto& b = rows[k];
    EXPECT_LE(std::tie(a.model, *a.grid_value, a.run, a.metric), std::tie(b.model, *b.grid_value, b.run, b.metric));
  }
}

TEST(Results, EmitWritesFileAndReportsBadPath) {
  const auto dir = fx::scratch_dir("results_emit");
  emit_results({sample_row()}, dir / "out.json", OutputFormat::kJson);
  std::ifstream in(dir / "out.json");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), rows_to_json({sample_row()}));
  try {
    emit_results({}, dir / "missing" / "x.csv", OutputFormat::kCsv);
    FAIL();
  } catch (const RuntimeFailure& e) {
    EXPECT_NE(std::string(e.what()).find("missing"), std::string::npos);
  }
}
