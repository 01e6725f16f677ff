#include "spec_file.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "phlift/expr/parser.h"

namespace phlift::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Line {
  size_t number;
  std::string text;
};

[[noreturn]] void fail(size_t line, const std::string& msg) {
  throw SpecError("line " + std::to_string(line) + ": " + msg);
}

Expr parse_at(const Line& l, const std::string& text, const std::vector<std::string>& vars) {
  try {
    return parse(text, vars);
  } catch (const ParseError& e) {
    fail(l.number, e.what());
  }
}

size_t parse_index(const Line& l, const std::string& tok, size_t n) {
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') fail(l.number, "bad index '" + tok + "'");
  if (v < 1 || static_cast<size_t>(v) > n) {
    fail(l.number, "index " + tok + " outside 1.." + std::to_string(n));
  }
  return static_cast<size_t>(v - 1);
}

// "i j expr"
std::tuple<size_t, size_t, Expr> matrix_entry(const Line& l, const std::vector<std::string>& vars) {
  std::istringstream in(l.text);
  std::string a, b;
  in >> a >> b;
  std::string rest;
  std::getline(in, rest);
  rest = trim(rest);
  if (a.empty() || b.empty() || rest.empty()) fail(l.number, "expected 'i j expr'");
  return {parse_index(l, a, vars.size()), parse_index(l, b, vars.size()), parse_at(l, rest, vars)};
}

ParameterBlock parameters(const std::vector<Line>& lines) {
  ParameterBlock p;
  for (const auto& l : lines) {
    const auto eq = l.text.find('=');
    if (eq == std::string::npos) fail(l.number, "expected 'key = value'");
    const std::string key = trim(l.text.substr(0, eq));
    if (key.empty()) fail(l.number, "empty key");
    p.entries.emplace_back(key, trim(l.text.substr(eq + 1)));
  }
  return p;
}

}  // namespace

const std::string* ParameterBlock::find(const std::string& key) const {
  const std::string* v = nullptr;
  for (const auto& [k, val] : entries) {
    if (k == key) v = &val;
  }
  return v;
}

std::vector<std::string> ParameterBlock::all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& [k, val] : entries) {
    if (k == key) out.push_back(val);
  }
  return out;
}

std::vector<std::string> split_top_level(const std::string& s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& s) {
  const std::string t = trim(s);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (!t.empty() && *end == '\0') return v;
  return parse_rational(t).to_double();
}

Rational parse_rational(const std::string& s) {
  const Expr e = parse(trim(s), {});
  if (!e.is_constant()) throw SpecError("'" + s + "' is not a number");
  return e.value();
}

SystemSpecFile parse_spec_file(const std::string& text) {
  std::map<std::string, std::vector<Line>> sections;
  std::map<std::string, size_t> header_line;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  for (size_t number = 1; std::getline(in, raw); ++number) {
    const auto hash = raw.find('#');
    const std::string t = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail(number, "unterminated section header");
      current = trim(t.substr(1, t.size() - 2));
      static const std::vector<std::string> known{"states", "hamiltonian", "J", "R", "g", "simulate", "design"};
      if (std::find(known.begin(), known.end(), current) == known.end()) {
        fail(number, "unknown section [" + current + "]");
      }
      if (header_line.count(current)) fail(number, "duplicate section [" + current + "]");
      header_line[current] = number;
      sections[current];
      continue;
    }
    if (current.empty()) fail(number, "content before the first section");
    sections[current].push_back({number, t});
  }
  for (const char* required : {"states", "hamiltonian"}) {
    if (!sections.count(required)) throw SpecError(std::string("missing section [") + required + "]");
  }

  SystemSpecFile out;
  PHSystem& sys = out.system;
  for (const auto& l : sections["states"]) {
    std::istringstream ls(l.text);
    std::string name, lo, hi, extra;
    ls >> name >> lo >> hi >> extra;
    if (!extra.empty() || (!lo.empty() && hi.empty())) fail(l.number, "expected 'name [lo hi]'");
    if (std::find(sys.states.begin(), sys.states.end(), name) != sys.states.end()) {
      fail(l.number, "duplicate state '" + name + "'");
    }
    std::pair<double, double> box{-5.0, 5.0};
    if (!lo.empty()) {
      try {
        box = {parse_number(lo), parse_number(hi)};
      } catch (const Error& e) {
        fail(l.number, e.what());
      }
      if (!(box.first < box.second)) fail(l.number, "empty domain interval");
    }
    sys.states.push_back(name);
    sys.domain.bounds.push_back(box);
  }
  const size_t n = sys.states.size();
  if (n == 0) throw SpecError("no states declared");

  const auto& ham = sections["hamiltonian"];
  if (ham.size() != 1) {
    throw SpecError("line " + std::to_string(header_line["hamiltonian"]) + ": [hamiltonian] needs exactly one expression");
  }
  sys.hamiltonian = parse_at(ham[0], ham[0].text, sys.states);

  sys.J.assign(n, std::vector<Expr>(n));
  sys.R.assign(n, std::vector<Expr>(n));
  std::vector<std::vector<bool>> set(n, std::vector<bool>(n, false));
  for (const auto& l : sections["J"]) {
    const auto [i, j, e] = matrix_entry(l, sys.states);
    if (i == j && !e.is_zero()) fail(l.number, "diagonal of J must be zero");
    if (set[i][j]) fail(l.number, "duplicate entry");
    if (set[j][i]) {
      if (!is_identically_zero(sys.J[j][i] + e)) fail(l.number, "entry contradicts the antisymmetric mirror");
    } else {
      sys.J[j][i] = -e;
    }
    sys.J[i][j] = e;
    set[i][j] = true;
  }
  std::vector<std::vector<bool>> rset(n, std::vector<bool>(n, false));
  for (const auto& l : sections["R"]) {
    const auto [i, j, e] = matrix_entry(l, sys.states);
    if (rset[i][j]) fail(l.number, "duplicate entry");
    rset[i][j] = true;
    sys.R[i][j] = e;
  }
  for (const auto& l : sections["g"]) {
    const auto items = split_top_level(l.text);
    if (items.size() != n) fail(l.number, "port column needs " + std::to_string(n) + " entries");
    std::vector<Expr> col;
    for (const auto& it : items) col.push_back(parse_at(l, it, sys.states));
    sys.g.push_back(std::move(col));
  }
  out.simulate = parameters(sections["simulate"]);
  out.design = parameters(sections["design"]);
  return out;
}

SystemSpecFile load_spec_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw SpecError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_spec_file(ss.str());
}

}  // namespace phlift::cli
