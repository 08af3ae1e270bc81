#pragma once

#include <string_view>

#include <json.hpp>

namespace lcat::detail {

/// Parses the TOML subset used by experiment configs: comments, [table] and
/// [a.b] headers, bare or quoted keys, basic strings, integers, floats,
/// booleans and single-line arrays of those. Throws ConfigError naming the line.
nlohmann::json parse_toml(std::string_view text);

}  // namespace lcat::detail
