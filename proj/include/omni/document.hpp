#pragma once

// JSON problem and scheme documents. Every number may be given as a JSON
// number or a string; output always uses strings so exact values survive.
// Input errors name the line of the offending value.

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "omni/error.hpp"
#include "omni/field.hpp"
#include "omni/netcode.hpp"
#include "omni/sources.hpp"
#include "omni/value.hpp"

namespace omni::document {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using field::FieldMatrix;

inline std::string fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Maps JSON pointers to the line where their value starts.
class LineIndex {
 public:
  explicit LineIndex(std::string_view text) : text_(text) {
    skip_ws();
    if (pos_ < text_.size()) value("");
  }

  /// Line of the pointer, or of its nearest recorded ancestor.
  int line_of(std::string pointer) const {
    while (true) {
      if (auto it = lines_.find(pointer); it != lines_.end()) return it->second;
      if (pointer.empty()) return 1;
      pointer.erase(pointer.rfind('/'));
    }
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string() {
    std::string out;
    ++pos_;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out.push_back(text_[pos_++]);
    }
    ++pos_;
    return out;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out.push_back(c);
    }
    return out;
  }

  void value(const std::string& ptr) {
    skip_ws();
    lines_[ptr] = line_;
    if (pos_ >= text_.size()) return;
    char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      while (true) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] == '}') break;
        std::string key = string();
        skip_ws();
        ++pos_;  // ':'
        value(ptr + "/" + escape(key));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      for (std::size_t k = 0;; ++k) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] == ']') break;
        value(ptr + "/" + std::to_string(k));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ',') ++pos_;
      }
      ++pos_;
    } else if (c == '"') {
      string();
    } else {
      while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != '}' && text_[pos_] != ']' &&
             !std::isspace(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

/// Parsed JSON plus the line index, with typed accessors that raise
/// line-anchored InvalidInput errors.
class Reader {
 public:
  Reader(std::string_view text, std::string name) : name_(std::move(name)), lines_(text) {
    try {
      root_ = json::parse(text);
    } catch (const json::parse_error& e) {
      int line = 1;
      for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
      throw Error(Errc::invalid_input, name_ + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
    }
  }

  const json& root() const { return root_; }

  [[noreturn]] void fail(const std::string& ptr, const std::string& msg) const {
    throw Error(Errc::invalid_input,
                name_ + ":" + std::to_string(lines_.line_of(ptr)) + ": " + msg + " (at " + (ptr.empty() ? "/" : ptr) + ")");
  }

  const json& at(const std::string& ptr) const {
    json::json_pointer jp(ptr);
    if (!root_.contains(jp)) fail(ptr, "missing field");
    return root_.at(jp);
  }

  bool has(const std::string& ptr) const { return root_.contains(json::json_pointer(ptr)); }

  std::string text(const std::string& ptr) const {
    const json& v = at(ptr);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
    if (v.is_number_float()) return v.dump();
    fail(ptr, "expected a number or a numeric string");
  }

  std::uint64_t u64(const std::string& ptr) const {
    const std::string s = text(ptr);
    if (s.empty() || s.size() > 19 || s.find_first_not_of("0123456789") != std::string::npos) {
      fail(ptr, "expected a nonnegative integer, got '" + s + "'");
    }
    return std::stoull(s);
  }

  Rational rational(const std::string& ptr) const {
    try {
      return parse_rational(text(ptr));
    } catch (const Error& e) {
      fail(ptr, e.what());
    }
  }

  double probability(const std::string& ptr) const {
    const std::string s = text(ptr);
    try {
      return parse_rational(s).convert_to<double>();
    } catch (const Error&) {
    }
    try {
      std::size_t used = 0;
      double d = std::stod(s, &used);
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
    fail(ptr, "expected a probability, got '" + s + "'");
  }

  std::string str(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_string()) fail(ptr, "expected a string");
    return v.get<std::string>();
  }

  const json& array(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_array()) fail(ptr, "expected an array");
    return v;
  }

  const json& object(const std::string& ptr) const {
    const json& v = at(ptr);
    if (!v.is_object()) fail(ptr, "expected an object");
    return v;
  }

  FieldMatrix matrix(const std::string& ptr, std::optional<std::uint64_t> expect_p = std::nullopt) const {
    object(ptr);
    const std::uint64_t rows = u64(ptr + "/rows");
    const std::uint64_t cols = u64(ptr + "/cols");
    const std::uint64_t p = has(ptr + "/p") ? u64(ptr + "/p") : expect_p.value_or(0);
    if (!has(ptr + "/p") && !expect_p) fail(ptr, "matrix needs a modulus p");
    if (expect_p && p != *expect_p) fail(ptr + "/p", "matrix modulus differs from the source modulus");
    if (p < 2) fail(ptr + "/p", "modulus must be at least 2");
    const json& data = array(ptr + "/data");
    if (data.size() != rows) fail(ptr + "/data", "expected " + std::to_string(rows) + " rows, got " + std::to_string(data.size()));
    FieldMatrix m(rows, cols, p);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::string rp = ptr + "/data/" + std::to_string(r);
      const json& row = array(rp);
      if (row.size() != cols) fail(rp, "expected " + std::to_string(cols) + " entries, got " + std::to_string(row.size()));
      for (std::size_t c = 0; c < cols; ++c) {
        const std::uint64_t v = u64(rp + "/" + std::to_string(c));
        if (v >= p) fail(rp + "/" + std::to_string(c), "entry " + std::to_string(v) + " is not reduced mod " + std::to_string(p));
        m.set(r, c, v);
      }
    }
    return m;
  }

 private:
  std::string name_;
  LineIndex lines_;
  json root_;
};

using Source = std::variant<sources::LinearSource, sources::DmmsSource, sources::TableSource>;

struct Problem {
  Source source;
  std::optional<std::vector<Rational>> weights;
  std::uint64_t n = 1;
  std::uint64_t seed = 0;
  std::optional<std::string> declared_unit;
  std::string hash;

  int users() const {
    return std::visit([](const auto& s) {
      using S = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<S, sources::TableSource>) return s.m;
      else return s.users();
    }, source);
  }
  bool is_linear() const { return std::holds_alternative<sources::LinearSource>(source); }
};

namespace detail {

inline std::vector<int> parse_user_list(const Reader& rd, const std::string& ptr, const std::string& key, int m) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= key.size()) {
    std::size_t end = key.find(',', start);
    if (end == std::string::npos) end = key.size();
    std::string tok = key.substr(start, end - start);
    while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
    while (!tok.empty() && tok.back() == ' ') tok.pop_back();
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 3) {
      rd.fail(ptr, "subset key '" + key + "' must list users like \"1,3\"");
    }
    int u = std::stoi(tok);
    if (u < 1 || u > m) rd.fail(ptr, "user " + tok + " out of range 1.." + std::to_string(m));
    out.push_back(u - 1);
    start = end + 1;
  }
  return out;
}

inline sources::LinearSource parse_linear(const Reader& rd) {
  sources::LinearSource src;
  src.p = rd.u64("/source/p");
  src.packets = rd.u64("/source/N");
  try {
    field::require_prime_modulus(src.p);
  } catch (const Error& e) {
    rd.fail("/source/p", e.what());
  }
  const json& users = rd.array("/source/users");
  if (users.empty()) rd.fail("/source/users", "at least one user is required");
  if (users.size() > static_cast<std::size_t>(setfun::GroundSet::max_users)) rd.fail("/source/users", "more than 62 users");
  for (std::size_t i = 0; i < users.size(); ++i) {
    const std::string up = "/source/users/" + std::to_string(i);
    FieldMatrix a = rd.matrix(up, src.p);
    if (a.cols() != src.packets) {
      rd.fail(up + "/cols", "user " + std::to_string(i + 1) + " matrix has " + std::to_string(a.cols()) +
                                " columns, expected N = " + std::to_string(src.packets));
    }
    src.a.push_back(std::move(a));
  }
  auto problems = sources::validate(src);
  if (!problems.empty()) rd.fail("/source/users", problems.front());
  return src;
}

inline sources::DmmsSource parse_pmf(const Reader& rd) {
  sources::DmmsSource src;
  const json& alph = rd.array("/source/alphabets");
  if (alph.empty()) rd.fail("/source/alphabets", "at least one user is required");
  if (alph.size() > static_cast<std::size_t>(setfun::GroundSet::max_users)) rd.fail("/source/alphabets", "more than 62 users");
  std::size_t cells = 1;
  for (std::size_t i = 0; i < alph.size(); ++i) {
    const std::string ap = "/source/alphabets/" + std::to_string(i);
    std::uint64_t a = rd.u64(ap);
    if (a == 0) rd.fail(ap, "alphabet size must be positive");
    if (cells > (std::size_t{1} << 26) / a) rd.fail(ap, "joint alphabet exceeds 2^26 outcomes");
    cells *= a;
    src.alphabets.push_back(a);
  }
  src.pmf.assign(cells, 0.0);
  const json& entries = rd.object("/source/entries");
  for (const auto& [key, val] : entries.items()) {
    const std::string ep = "/source/entries/" + key;
    std::vector<std::size_t> digits;
    std::size_t start = 0;
    while (start <= key.size()) {
      std::size_t end = key.find(',', start);
      if (end == std::string::npos) end = key.size();
      std::string tok = key.substr(start, end - start);
      while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
      while (!tok.empty() && tok.back() == ' ') tok.pop_back();
      if (tok.empty() || tok.size() > 18 || tok.find_first_not_of("0123456789") != std::string::npos) {
        rd.fail(ep, "outcome key '" + key + "' must be comma-separated symbols like \"0,1\"");
      }
      digits.push_back(std::stoull(tok));
      start = end + 1;
    }
    if (digits.size() != src.alphabets.size()) {
      rd.fail(ep, "outcome '" + key + "' has " + std::to_string(digits.size()) + " coordinates, expected " +
                      std::to_string(src.alphabets.size()));
    }
    std::size_t idx = 0;
    for (std::size_t i = 0; i < digits.size(); ++i) {
      if (digits[i] >= src.alphabets[i]) rd.fail(ep, "symbol " + std::to_string(digits[i]) + " outside alphabet of user " + std::to_string(i + 1));
      idx = idx * src.alphabets[i] + digits[i];
    }
    src.pmf[idx] += rd.probability(ep);
  }
  auto problems = sources::validate(src);
  if (!problems.empty()) rd.fail("/source/entries", problems.front());
  return src;
}

inline sources::TableSource parse_table(const Reader& rd) {
  sources::TableSource src;
  const std::uint64_t m = rd.u64("/source/m");
  if (m < 1 || m > 20) rd.fail("/source/m", "table sources support 1 to 20 users");
  src.m = static_cast<int>(m);
  src.unit = Unit{rd.str("/source/unit")};
  src.h.assign(std::size_t{1} << m, Rational(0));
  std::vector<bool> given(src.h.size(), false);
  given[0] = true;
  const json& ent = rd.object("/source/entropies");
  for (const auto& [key, val] : ent.items()) {
    const std::string ep = "/source/entropies/" + key;
    setfun::Mask s = 0;
    for (int u : parse_user_list(rd, ep, key, src.m)) s |= setfun::bit(u);
    if (given[s] && s != 0) rd.fail(ep, "subset listed twice");
    src.h[s] = rd.rational(ep);
    given[s] = true;
  }
  for (std::size_t s = 1; s < given.size(); ++s) {
    if (!given[s]) {
      std::string name;
      for (int u : setfun::members(s)) name += (name.empty() ? "" : ",") + std::to_string(u + 1);
      rd.fail("/source/entropies", "entropy of subset {" + name + "} is missing");
    }
  }
  if (src.h[0] != 0) rd.fail("/source/entropies", "entropy of the empty set must be 0");
  return src;
}

}  // namespace detail

inline Problem parse_problem(std::string_view text, const std::string& name) {
  Reader rd(text, name);
  if (!rd.root().is_object()) rd.fail("", "problem document must be a JSON object");
  Problem prob;
  prob.hash = fnv1a64(text);
  const std::string kind = rd.str("/source/kind");
  if (kind == "linear") prob.source = detail::parse_linear(rd);
  else if (kind == "pmf") prob.source = detail::parse_pmf(rd);
  else if (kind == "table") prob.source = detail::parse_table(rd);
  else rd.fail("/source/kind", "unknown source kind '" + kind + "' (expected linear, pmf or table)");
  if (kind != "table" && rd.has("/source/unit")) prob.declared_unit = rd.str("/source/unit");
  if (rd.has("/weights")) {
    const json& w = rd.array("/weights");
    if (w.size() != static_cast<std::size_t>(prob.users())) {
      rd.fail("/weights", "expected " + std::to_string(prob.users()) + " weights, got " + std::to_string(w.size()));
    }
    std::vector<Rational> alpha;
    for (std::size_t i = 0; i < w.size(); ++i) {
      Rational a = rd.rational("/weights/" + std::to_string(i));
      if (a < 0) rd.fail("/weights/" + std::to_string(i), "weights must be nonnegative");
      alpha.push_back(a);
    }
    prob.weights = std::move(alpha);
  }
  if (rd.has("/n")) {
    prob.n = rd.u64("/n");
    if (prob.n == 0) rd.fail("/n", "block length n must be at least 1");
  }
  if (rd.has("/seed")) prob.seed = rd.u64("/seed");
  return prob;
}

// --- output helpers ---------------------------------------------------------

template <class V>
std::string num(const V& v) {
  return ValueTraits<V>::to_string(v);
}

inline std::string num(std::uint64_t v) { return std::to_string(v); }

template <class V>
ordered_json numbers(const std::vector<V>& vs) {
  ordered_json out = ordered_json::array();
  for (const auto& v : vs) out.push_back(num(v));
  return out;
}

inline ordered_json partition_json(const setfun::Partition& p) {
  ordered_json out = ordered_json::array();
  for (setfun::Mask b : p) {
    ordered_json block = ordered_json::array();
    for (int u : setfun::members(b)) block.push_back(std::to_string(u + 1));
    out.push_back(block);
  }
  return out;
}

inline ordered_json matrix_json(const FieldMatrix& m) {
  ordered_json out;
  out["rows"] = std::to_string(m.rows());
  out["cols"] = std::to_string(m.cols());
  out["p"] = std::to_string(m.modulus());
  ordered_json data = ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(std::to_string(m.at(r, c)));
    data.push_back(row);
  }
  out["data"] = data;
  return out;
}

inline ordered_json scheme_json(const netcode::TransmissionScheme& s) {
  ordered_json out;
  out["n"] = std::to_string(s.n);
  out["p"] = std::to_string(s.p);
  ordered_json users = ordered_json::array();
  for (const auto& c : s.c) users.push_back(matrix_json(c));
  out["coefficients"] = users;
  return out;
}

inline netcode::TransmissionScheme parse_scheme(std::string_view text, const std::string& name,
                                                const sources::LinearSource& src) {
  Reader rd(text, name);
  if (!rd.root().is_object()) rd.fail("", "scheme document must be a JSON object");
  netcode::TransmissionScheme s;
  s.n = rd.u64("/n");
  if (s.n == 0) rd.fail("/n", "block length n must be at least 1");
  s.p = rd.u64("/p");
  if (s.p != src.p) rd.fail("/p", "scheme field F_" + std::to_string(s.p) + " differs from source field F_" + std::to_string(src.p));
  const json& users = rd.array("/coefficients");
  if (users.size() != src.a.size()) {
    rd.fail("/coefficients", "expected " + std::to_string(src.a.size()) + " coefficient matrices, got " + std::to_string(users.size()));
  }
  for (std::size_t i = 0; i < users.size(); ++i) {
    const std::string cp = "/coefficients/" + std::to_string(i);
    FieldMatrix c = rd.matrix(cp, src.p);
    if (c.cols() != s.n * src.a[i].rows()) {
      rd.fail(cp + "/cols", "user " + std::to_string(i + 1) + " coefficients need n * l_i = " +
                                std::to_string(s.n * src.a[i].rows()) + " columns");
    }
    s.c.push_back(std::move(c));
  }
  return s;
}

}  // namespace omni::document
