#pragma once

#include <cctype>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "landmark/kernels.hpp"

namespace landmark::config {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

// Config value: number, bool, string, array, or inline table. The file
// format is one `key = value` per line, `#` comments, inline tables
// `{ k = v, ... }` and arrays `[v, ...]`; unknown keys are rejected by the
// consumers, not the parser.
class Value {
 public:
  Value() : v_(0.0) {}
  explicit Value(double d) : v_(d) {}
  explicit Value(bool b) : v_(b) {}
  explicit Value(std::string s) : v_(std::move(s)) {}
  explicit Value(Array a) : v_(std::move(a)) {}
  explicit Value(Table t) : v_(std::move(t)) {}

  bool is_number() const { return std::holds_alternative<double>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_array() const { return std::holds_alternative<Array>(v_); }
  bool is_table() const { return std::holds_alternative<Table>(v_); }

  double number(const std::string& key) const {
    if (!is_number()) throw ConfigError("key '" + key + "': expected number");
    return std::get<double>(v_);
  }
  bool boolean(const std::string& key) const {
    if (!is_bool()) throw ConfigError("key '" + key + "': expected bool");
    return std::get<bool>(v_);
  }
  const std::string& string(const std::string& key) const {
    if (!is_string()) throw ConfigError("key '" + key + "': expected string");
    return std::get<std::string>(v_);
  }
  const Array& array(const std::string& key) const {
    if (!is_array()) throw ConfigError("key '" + key + "': expected array");
    return std::get<Array>(v_);
  }
  const Table& table(const std::string& key) const {
    if (!is_table()) throw ConfigError("key '" + key + "': expected table");
    return std::get<Table>(v_);
  }

 private:
  std::variant<double, bool, std::string, Array, Table> v_;
};

namespace detail {

struct Parser {
  std::string_view s;
  std::size_t pos = 0;
  int line = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("config parse error at line " + std::to_string(line) +
                      ": " + msg);
  }

  bool eof() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }

  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r'))
      ++pos;
    if (!eof() && peek() == '#') {
      while (!eof() && peek() != '\n') ++pos;
    }
  }

  void skip_ws_and_newlines() {
    for (;;) {
      skip_inline_ws();
      if (!eof() && peek() == '\n') {
        ++pos;
        ++line;
        continue;
      }
      return;
    }
  }

  std::string parse_key() {
    skip_inline_ws();
    std::size_t start = pos;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) ||
                      peek() == '_' || peek() == '-'))
      ++pos;
    if (pos == start) fail("expected a key");
    return std::string(s.substr(start, pos - start));
  }

  void expect(char c) {
    skip_inline_ws();
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos;
  }

  Value parse_value() {
    skip_ws_and_newlines();
    if (eof()) fail("expected a value");
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '{') return parse_table();
    if (c == '[') return parse_array();
    if (c == 't' || c == 'f') return parse_bool();
    return parse_number();
  }

  Value parse_string() {
    ++pos;  // opening quote
    std::string out;
    while (!eof() && peek() != '"') {
      if (peek() == '\n') fail("newline inside string");
      out.push_back(peek());
      ++pos;
    }
    if (eof()) fail("unterminated string");
    ++pos;
    return Value(std::move(out));
  }

  Value parse_bool() {
    if (s.substr(pos, 4) == "true") {
      pos += 4;
      return Value(true);
    }
    if (s.substr(pos, 5) == "false") {
      pos += 5;
      return Value(false);
    }
    fail("expected true/false");
  }

  Value parse_number() {
    std::size_t start = pos;
    while (!eof() && (std::isdigit(static_cast<unsigned char>(peek())) ||
                      peek() == '+' || peek() == '-' || peek() == '.' ||
                      peek() == 'e' || peek() == 'E'))
      ++pos;
    if (pos == start) fail("expected a number");
    const std::string tok(s.substr(start, pos - start));
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) fail("malformed number '" + tok + "'");
      return Value(v);
    } catch (const std::exception&) {
      fail("malformed number '" + tok + "'");
    }
  }

  Value parse_array() {
    ++pos;  // '['
    Array arr;
    skip_ws_and_newlines();
    if (!eof() && peek() == ']') {
      ++pos;
      return Value(std::move(arr));
    }
    for (;;) {
      arr.push_back(parse_value());
      skip_ws_and_newlines();
      if (!eof() && peek() == ',') {
        ++pos;
        skip_ws_and_newlines();
        if (!eof() && peek() == ']') {  // trailing comma
          ++pos;
          return Value(std::move(arr));
        }
        continue;
      }
      if (!eof() && peek() == ']') {
        ++pos;
        return Value(std::move(arr));
      }
      fail("expected ',' or ']' in array");
    }
  }

  Value parse_table() {
    ++pos;  // '{'
    Table tab;
    skip_ws_and_newlines();
    if (!eof() && peek() == '}') {
      ++pos;
      return Value(std::move(tab));
    }
    for (;;) {
      const std::string key = parse_key();
      expect('=');
      if (tab.count(key)) fail("duplicate key '" + key + "'");
      tab.emplace(key, parse_value());
      skip_ws_and_newlines();
      if (!eof() && peek() == ',') {
        ++pos;
        continue;
      }
      if (!eof() && peek() == '}') {
        ++pos;
        return Value(std::move(tab));
      }
      fail("expected ',' or '}' in table");
    }
  }
};

}  // namespace detail

inline Table parse(std::string_view text) {
  detail::Parser p{text};
  Table top;
  for (;;) {
    p.skip_ws_and_newlines();
    if (p.eof()) break;
    const std::string key = p.parse_key();
    p.expect('=');
    if (top.count(key))
      throw ConfigError("duplicate top-level key '" + key + "'");
    top.emplace(key, p.parse_value());
    p.skip_inline_ws();
    if (!p.eof() && p.peek() != '\n')
      p.fail("unexpected trailing characters after value for '" + key + "'");
  }
  return top;
}

inline void reject_unknown_keys(const Table& t,
                                const std::set<std::string>& allowed,
                                const std::string& context) {
  for (const auto& [k, v] : t)
    if (!allowed.count(k))
      throw ConfigError("unknown key '" + k + "' in " + context);
}

// Kernel spec from a config block with the fixed key names
// variant, c, D, gamma, samples.
inline kernels::KernelSpec kernel_spec_from_table(const Table& t) {
  reject_unknown_keys(t, {"variant", "c", "D", "gamma", "samples"},
                      "kernel spec");
  auto it = t.find("variant");
  if (it == t.end()) throw ConfigError("kernel spec: missing 'variant'");
  const std::string& v = it->second.string("variant");

  kernels::KernelSpec spec;
  if (v == "laplacian")
    spec.variant = kernels::Variant::laplacian;
  else if (v == "c1_bessel")
    spec.variant = kernels::Variant::c1_bessel;
  else if (v == "gaussian")
    spec.variant = kernels::Variant::gaussian;
  else if (v == "log_modified")
    spec.variant = kernels::Variant::log_modified;
  else if (v == "power_gap")
    spec.variant = kernels::Variant::power_gap;
  else if (v == "tabulated")
    spec.variant = kernels::Variant::tabulated;
  else
    throw ConfigError("kernel spec: unknown variant '" + v + "'");

  for (const auto& [key, val] : t) {
    if (key == "variant" || key == "samples") continue;
    const bool log_mod = spec.variant == kernels::Variant::log_modified;
    const bool pow_gap = spec.variant == kernels::Variant::power_gap;
    if (key == "c" && !log_mod)
      throw ConfigError("kernel spec: 'c' only applies to log_modified");
    if ((key == "D" || key == "gamma") && !pow_gap)
      throw ConfigError("kernel spec: '" + key + "' only applies to power_gap");
    if (key == "c") spec.c = val.number("c");
    if (key == "D") spec.D = val.number("D");
    if (key == "gamma") spec.gamma = val.number("gamma");
  }
  if (t.count("samples")) {
    if (spec.variant != kernels::Variant::tabulated)
      throw ConfigError("kernel spec: 'samples' only applies to tabulated");
    for (const auto& row : t.at("samples").array("samples")) {
      const auto& pair = row.array("samples");
      if (pair.size() != 2)
        throw ConfigError("kernel spec: samples entries must be [r, value]");
      spec.samples.emplace_back(pair[0].number("samples"),
                                pair[1].number("samples"));
    }
  }
  return spec;
}

// Parse a --kernel argument: a bare builtin name ("laplacian") or an inline
// table ("{ variant = \"log_modified\", c = 1.5 }").
inline kernels::KernelSpec parse_kernel_arg(const std::string& arg) {
  std::string trimmed = arg;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.front())))
    trimmed.erase(trimmed.begin());
  if (!trimmed.empty() && trimmed.front() == '{') {
    const Table top = parse("kernel = " + trimmed);
    return kernel_spec_from_table(top.at("kernel").table("kernel"));
  }
  Table t;
  t.emplace("variant", Value(trimmed));
  return kernel_spec_from_table(t);
}

}  // namespace landmark::config
