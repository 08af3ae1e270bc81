#include "toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <string>

#include "lcat/error.hpp"

namespace lcat::detail {
namespace {

class LineParser {
 public:
  LineParser(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("toml line " + std::to_string(line_) + ": " + what);
  }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool at_end_or_comment() {
    skip_ws();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }
  bool consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  std::string key() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '"') return basic_string();
    const std::size_t b = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
      ++pos_;
    if (b == pos_) fail("expected a key");
    return std::string(s_.substr(b, pos_ - b));
  }

  std::string basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) fail("unterminated string");
      const char c = s_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (pos_ >= s_.size()) fail("unterminated escape");
      switch (const char e = s_[pos_++]) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  nlohmann::json value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return basic_string();
    if (c == '[') {
      ++pos_;
      nlohmann::json arr = nlohmann::json::array();
      if (consume(']')) return arr;
      while (true) {
        arr.push_back(value());
        if (consume(']')) return arr;
        expect(',');
        if (consume(']')) return arr;
      }
    }
    const std::size_t b = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
           s_[pos_] != '\t')
      ++pos_;
    std::string tok(s_.substr(b, pos_ - b));
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::erase(tok, '_');
    if (tok.empty()) fail("missing value");
    std::int64_t iv = 0;
    auto [ip, iec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
    if (iec == std::errc() && ip == tok.data() + tok.size()) return iv;
    std::size_t used = 0;
    try {
      const double dv = std::stod(tok, &used);
      if (used == tok.size()) return dv;
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + tok + "'");
  }

 private:
  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

nlohmann::json parse_toml(std::string_view text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json* table = &root;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    LineParser p(line, line_no);
    if (p.at_end_or_comment()) continue;
    if (p.consume('[')) {
      if (p.consume('[')) p.fail("arrays of tables are not supported");
      table = &root;
      do {
        const std::string k = p.key();
        nlohmann::json& next = (*table)[k];
        if (next.is_null()) next = nlohmann::json::object();
        if (!next.is_object()) p.fail("'" + k + "' is not a table");
        table = &next;
      } while (p.consume('.'));
      p.expect(']');
      if (!p.at_end_or_comment()) p.fail("trailing characters after table header");
      continue;
    }
    const std::string k = p.key();
    p.expect('=');
    nlohmann::json v = p.value();
    if (!p.at_end_or_comment()) p.fail("trailing characters after value");
    if (table->contains(k)) p.fail("duplicate key '" + k + "'");
    (*table)[k] = std::move(v);
  }
  return root;
}

}  // namespace lcat::detail
