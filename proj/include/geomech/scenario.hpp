#pragma once

// Scenario files: a small TOML subset (sections, key = value, strings, numbers,
// booleans and flat arrays, '#' comments) mapped onto the engine types.

#include <cctype>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "geomech/constraints.hpp"
#include "geomech/dynamics.hpp"
#include "geomech/errors.hpp"
#include "geomech/expr.hpp"
#include "geomech/geometry.hpp"
#include "geomech/parser.hpp"
#include "geomech/relativity_em.hpp"
#include "geomech/sampling.hpp"

namespace geomech {

namespace toml {

struct Value {
  enum class Kind { number, string, boolean, array };
  Kind kind = Kind::number;
  double number = 0.0;
  std::string text;
  bool flag = false;
  std::vector<Value> items;
  std::size_t line = 0;
};

struct Document {
  // section -> key -> value; keys before any section live under "".
  std::map<std::string, std::map<std::string, Value>> sections;

  const Value* find(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    if (s == sections.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }
  bool has(const std::string& section) const { return sections.count(section) != 0; }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  Document read() {
    Document doc;
    std::string section;
    doc.sections[section];
    for (;;) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_inline_space();
        const std::string name = bare_key();
        skip_inline_space();
        if (eof() || peek() != ']') fail("expected ']' after section name");
        ++pos_;
        end_of_line();
        if (doc.sections.count(name) && name != "") fail("duplicate section [" + name + "]");
        section = name;
        doc.sections[section];
        continue;
      }
      const std::size_t key_line = line_;
      const std::string key = bare_key();
      skip_inline_space();
      if (eof() || peek() != '=') fail("expected '=' after key '" + key + "'");
      ++pos_;
      skip_inline_space();
      Value v = value();
      v.line = key_line;
      end_of_line();
      if (!doc.sections[section].emplace(key, std::move(v)).second) {
        line_ = key_line;
        fail("duplicate key '" + key + "'");
      }
    }
    return doc;
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("scenario line " + std::to_string(line_) + ": " + what);
  }

  void skip_inline_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (!eof() && peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }

  void skip_blank_lines() {
    for (;;) {
      skip_inline_space();
      skip_comment();
      if (eof() || peek() != '\n') return;
      ++pos_;
      ++line_;
    }
  }

  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail(std::string("unexpected '") + peek() + "'");
    ++pos_;
    ++line_;
  }

  std::string bare_key() {
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (start == pos_) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  // Inside arrays values may span lines.
  void skip_array_space() {
    for (;;) {
      skip_inline_space();
      skip_comment();
      if (eof() || peek() != '\n') return;
      ++pos_;
      ++line_;
    }
  }

  Value value() {
    if (eof()) fail("missing value");
    Value v;
    v.line = line_;
    const char c = peek();
    if (c == '"') {
      v.kind = Value::Kind::string;
      v.text = quoted();
    } else if (c == '[') {
      ++pos_;
      v.kind = Value::Kind::array;
      skip_array_space();
      while (!eof() && peek() != ']') {
        Value item = value();
        if (item.kind == Value::Kind::array) fail("nested arrays are not supported");
        v.items.push_back(std::move(item));
        skip_array_space();
        if (!eof() && peek() == ',') {
          ++pos_;
          skip_array_space();
        } else {
          break;
        }
      }
      if (eof() || peek() != ']') fail("expected ']' to close array");
      ++pos_;
    } else if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v.kind = Value::Kind::boolean;
      v.flag = true;
    } else if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v.kind = Value::Kind::boolean;
    } else {
      v.kind = Value::Kind::number;
      const std::size_t start = pos_;
      if (peek() == '+' || peek() == '-') ++pos_;
      while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '_' ||
                        ((peek() == '+' || peek() == '-') && (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
        ++pos_;
      std::string token(text_.substr(start, pos_ - start));
      std::erase(token, '_');
      const char* first = token.data() + (token.size() && token[0] == '+' ? 1 : 0);
      const auto res = std::from_chars(first, token.data() + token.size(), v.number);
      if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size())
        fail("malformed value '" + token + "'");
    }
    return v;
  }

  std::string quoted() {
    ++pos_;
    std::string out;
    while (!eof() && peek() != '"') {
      char c = peek();
      if (c == '\n') fail("unterminated string");
      if (c == '\\') {
        ++pos_;
        if (eof()) fail("unterminated string");
        c = peek();
        switch (c) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unknown escape '\\") + c + "'");
        }
        ++pos_;
        continue;
      }
      out += c;
      ++pos_;
    }
    if (eof()) fail("unterminated string");
    ++pos_;
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

inline Document parse(std::string_view text) { return Reader(text).read(); }

}  // namespace toml

struct WaveSpec {
  std::optional<Expr> S;
  std::optional<Expr> rho;
  std::optional<Expr> a_re;
  std::optional<Expr> a_im;
  std::optional<Expr> W;
  std::optional<double> E;
  std::optional<double> m;
};

struct RunSpec {
  Vec x0;
  Vec v0;
  double t_end = 0.0;
  double dt = 0.0;
};

struct Scenario {
  std::string name;
  ChartSpec chart;
  std::optional<std::size_t> time_index;  // 0-based
  std::optional<Metric> metric_spec;
  std::optional<Expr> potential;
  std::optional<ForceForm> force;
  std::optional<TwoForm> two_form;
  std::optional<VectorPotential> vector_potential;
  std::optional<VectorFieldOnM> field;
  std::optional<VectorFieldOnM> symmetry;
  std::optional<TimeConstraint> constraint;
  std::optional<WaveSpec> wave;
  std::optional<RunSpec> run;
  double c = 1.0;
  std::optional<double> E0;
  int codiff_sign = 1;
  SampleBox box;

  std::size_t dim() const { return chart.dim; }
  const Metric& metric() const { return *metric_spec; }

  /// dU + A + i_ḋF from whichever blocks are present.
  ForceForm total_force() const {
    const std::size_t n = dim();
    ForceForm out = ForceForm::zero(n);
    if (potential) {
      const auto dU = partials(*potential, n);
      for (std::size_t k = 0; k < n; ++k) out.A[k] += dU[k];
    }
    if (force)
      for (std::size_t k = 0; k < n; ++k) out.A[k] += force->A[k];
    if (two_form) {
      const auto lorentz = lorentz_force_form(*two_form);
      for (std::size_t k = 0; k < n; ++k) out.A[k] += lorentz.A[k];
    }
    return out;
  }

  SecondOrderField unconstrained_field() const { return newton_field(metric(), total_force()); }

  SecondOrderField full_field() const {
    if (constraint) return SecondOrderField(metric(), total_force(), *constraint);
    return unconstrained_field();
  }

  std::size_t time_index_or_default() const { return time_index.value_or(0); }
};

namespace detail {

inline const std::set<std::string>& allowed_keys(const std::string& section) {
  static const std::map<std::string, std::set<std::string>> table = {
      {"", {"name"}},
      {"chart", {"dim", "names", "time_index"}},
      {"metric", {}},  // gIJ, g_I_J and diag checked separately
      {"potential", {"U"}},
      {"force", {"A"}},
      {"two_form", {}},
      {"vector_potential", {"A"}},
      {"field", {"u"}},
      {"symmetry", {"v"}},
      {"constraint", {"type", "index", "components"}},
      {"wave", {"S", "rho", "a_re", "a_im", "W", "E", "m"}},
      {"run", {"x0", "v0", "t_end", "dt"}},
      {"constants", {"c", "E0", "codiff_sign"}},
      {"sample_box", {"lo", "hi", "vlo", "vhi", "count"}},
  };
  const auto it = table.find(section);
  if (it == table.end()) throw ConfigError("unknown section [" + section + "]");
  return it->second;
}

/// Parses "g12", "g_1_2", "F12" or "F_1_2" into 0-based (i, j).
inline std::optional<std::pair<std::size_t, std::size_t>> index_pair(const std::string& key, char letter,
                                                                    std::size_t n) {
  if (key.size() < 3 || key[0] != letter) return std::nullopt;
  std::size_t i = 0, j = 0;
  if (key[1] == '_') {
    const auto sep = key.find('_', 2);
    if (sep == std::string::npos) return std::nullopt;
    const auto r1 = std::from_chars(key.data() + 2, key.data() + sep, i);
    const auto r2 = std::from_chars(key.data() + sep + 1, key.data() + key.size(), j);
    if (r1.ptr != key.data() + sep || r2.ptr != key.data() + key.size() || r1.ec != std::errc() ||
        r2.ec != std::errc())
      return std::nullopt;
  } else {
    if (key.size() != 3 || !std::isdigit(static_cast<unsigned char>(key[1])) ||
        !std::isdigit(static_cast<unsigned char>(key[2])))
      return std::nullopt;
    i = static_cast<std::size_t>(key[1] - '0');
    j = static_cast<std::size_t>(key[2] - '0');
  }
  if (i == 0 || j == 0 || i > n || j > n) return std::nullopt;
  return std::make_pair(i - 1, j - 1);
}

class ScenarioBuilder {
 public:
  explicit ScenarioBuilder(const toml::Document& doc) : doc_(doc) {}

  Scenario build() {
    for (const auto& [section, keys] : doc_.sections) {
      const auto& allowed = allowed_keys(section);
      if (section == "metric" || section == "two_form") continue;
      for (const auto& [key, v] : keys)
        if (!allowed.count(key))
          throw ConfigError("scenario line " + std::to_string(v.line) + ": unknown key '" + key + "' in [" +
                            section + "]");
    }

    Scenario s;
    if (const auto* v = doc_.find("", "name")) s.name = string(*v, "name");
    if (!doc_.has("chart")) throw ConfigError("scenario needs a [chart] section");
    const auto* dim = doc_.find("chart", "dim");
    if (!dim) throw ConfigError("[chart] needs dim");
    const double d = number(*dim, "chart.dim");
    if (d < 1 || d != static_cast<double>(static_cast<std::size_t>(d))) throw ConfigError("chart.dim must be a positive integer");
    n_ = static_cast<std::size_t>(d);
    std::vector<std::string> names;
    if (const auto* v = doc_.find("chart", "names")) names = strings(*v, "chart.names");
    try {
      s.chart = ChartSpec::make(n_, names);
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("chart: ") + e.what());
    }
    if (const auto* v = doc_.find("chart", "time_index")) s.time_index = index(*v, "chart.time_index");

    s.metric_spec = metric();
    if (const auto* v = doc_.find("potential", "U")) s.potential = expr(*v, "potential.U", true);
    if (const auto* v = doc_.find("force", "A")) s.force = ForceForm{exprs(*v, "force.A", false)};
    if (doc_.has("two_form")) s.two_form = two_form();
    if (const auto* v = doc_.find("vector_potential", "A"))
      s.vector_potential = VectorFieldOnM(exprs(*v, "vector_potential.A", true));
    if (const auto* v = doc_.find("field", "u")) s.field = VectorFieldOnM(exprs(*v, "field.u", true));
    if (const auto* v = doc_.find("symmetry", "v")) s.symmetry = VectorFieldOnM(exprs(*v, "symmetry.v", true));
    if (doc_.has("constraint")) s.constraint = constraint(s);
    if (doc_.has("wave")) s.wave = wave();
    if (doc_.has("run")) s.run = run();

    if (const auto* v = doc_.find("constants", "c")) s.c = number(*v, "constants.c");
    if (!(s.c > 0.0)) throw ConfigError("constants.c must be positive");
    if (const auto* v = doc_.find("constants", "E0")) s.E0 = number(*v, "constants.E0");
    if (const auto* v = doc_.find("constants", "codiff_sign")) {
      const double sign = number(*v, "constants.codiff_sign");
      if (sign != 1.0 && sign != -1.0) throw ConfigError("constants.codiff_sign must be +1 or -1");
      s.codiff_sign = static_cast<int>(sign);
    }
    s.box = box();
    return s;
  }

 private:
  static double number(const toml::Value& v, const std::string& what) {
    if (v.kind != toml::Value::Kind::number) throw ConfigError(what + " must be a number");
    return v.number;
  }
  static std::string string(const toml::Value& v, const std::string& what) {
    if (v.kind != toml::Value::Kind::string) throw ConfigError(what + " must be a string");
    return v.text;
  }
  static std::vector<std::string> strings(const toml::Value& v, const std::string& what) {
    if (v.kind != toml::Value::Kind::array) throw ConfigError(what + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& item : v.items) out.push_back(string(item, what));
    return out;
  }
  std::vector<double> numbers(const toml::Value& v, const std::string& what) const {
    if (v.kind != toml::Value::Kind::array) throw ConfigError(what + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& item : v.items) out.push_back(number(item, what));
    if (out.size() != n_) throw ConfigError(what + " must have " + std::to_string(n_) + " entries");
    return out;
  }
  Vec vec(const toml::Value& v, const std::string& what) const {
    const auto values = numbers(v, what);
    return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  std::size_t index(const toml::Value& v, const std::string& what) const {
    const double d = number(v, what);
    if (d < 1 || d > static_cast<double>(n_) || d != static_cast<double>(static_cast<std::size_t>(d)))
      throw ConfigError(what + " must be an integer between 1 and " + std::to_string(n_));
    return static_cast<std::size_t>(d) - 1;
  }

  Expr expr(const toml::Value& v, const std::string& what, bool position_only) const {
    const std::string text = string(v, what);
    Expr e;
    try {
      e = parse(text, n_);
    } catch (const ParseError& err) {
      throw ConfigError(what + ": " + err.what());
    }
    if (position_only && e.depends_on_velocity()) throw ConfigError(what + " must not depend on velocities");
    return e;
  }
  std::vector<Expr> exprs(const toml::Value& v, const std::string& what, bool position_only) const {
    const auto texts = strings(v, what);
    if (texts.size() != n_) throw ConfigError(what + " must have " + std::to_string(n_) + " entries");
    std::vector<Expr> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      toml::Value item;
      item.kind = toml::Value::Kind::string;
      item.text = texts[i];
      out.push_back(expr(item, what + "[" + std::to_string(i + 1) + "]", position_only));
    }
    return out;
  }

  Metric metric() const {
    std::vector<std::vector<Expr>> rows(n_, std::vector<Expr>(n_, Expr(0.0)));
    if (!doc_.has("metric")) return Metric::euclidean(n_);
    const auto& keys = doc_.sections.at("metric");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [key, v] : keys) {
      if (key == "diag") {
        const auto d = exprs(v, "metric.diag", true);
        for (std::size_t i = 0; i < n_; ++i) {
          if (!seen.insert({i, i}).second) throw ConfigError("metric entry g" + std::to_string(i + 1) + std::to_string(i + 1) + " given twice");
          rows[i][i] = d[i];
        }
        continue;
      }
      const auto ij = index_pair(key, 'g', n_);
      if (!ij) throw ConfigError("scenario line " + std::to_string(v.line) + ": unknown key '" + key + "' in [metric]");
      auto [i, j] = *ij;
      if (i > j) throw ConfigError("metric." + key + ": give the upper triangle only");
      if (!seen.insert({i, j}).second) throw ConfigError("metric entry " + key + " given twice");
      rows[i][j] = expr(v, "metric." + key, true);
    }
    try {
      return Metric::from_upper(rows);
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("metric: ") + e.what());
    }
  }

  TwoForm two_form() const {
    TwoForm F(n_);
    for (const auto& [key, v] : doc_.sections.at("two_form")) {
      const auto ij = index_pair(key, 'F', n_);
      if (!ij) throw ConfigError("scenario line " + std::to_string(v.line) + ": unknown key '" + key + "' in [two_form]");
      auto [i, j] = *ij;
      if (i >= j) throw ConfigError("two_form." + key + ": give entries with i < j");
      F.set(i, j, expr(v, "two_form." + key, true));
    }
    return F;
  }

  TimeConstraint constraint(const Scenario& s) const {
    const auto* type = doc_.find("constraint", "type");
    if (!type) throw ConfigError("[constraint] needs type");
    const std::string t = string(*type, "constraint.type");
    if (t == "dx0") {
      std::size_t i0 = s.time_index.value_or(0);
      if (const auto* v = doc_.find("constraint", "index")) i0 = index(*v, "constraint.index");
      return TimeConstraint::exact_differential(n_, i0);
    }
    if (t == "theta") return TimeConstraint::liouville_theta(*s.metric_spec);
    if (t == "general") {
      const auto* v = doc_.find("constraint", "components");
      if (!v) throw ConfigError("general constraint needs components");
      return TimeConstraint::general(exprs(*v, "constraint.components", false));
    }
    throw ConfigError("constraint.type must be dx0, theta or general");
  }

  WaveSpec wave() const {
    WaveSpec w;
    if (const auto* v = doc_.find("wave", "S")) w.S = expr(*v, "wave.S", true);
    if (const auto* v = doc_.find("wave", "rho")) w.rho = expr(*v, "wave.rho", true);
    if (const auto* v = doc_.find("wave", "a_re")) w.a_re = expr(*v, "wave.a_re", true);
    if (const auto* v = doc_.find("wave", "a_im")) w.a_im = expr(*v, "wave.a_im", true);
    if (const auto* v = doc_.find("wave", "W")) w.W = expr(*v, "wave.W", true);
    if (const auto* v = doc_.find("wave", "E")) w.E = number(*v, "wave.E");
    if (const auto* v = doc_.find("wave", "m")) w.m = number(*v, "wave.m");
    if (w.a_im && !w.a_re) w.a_re = Expr(0.0);
    if (w.a_re && !w.a_im) w.a_im = Expr(0.0);
    return w;
  }

  RunSpec run() const {
    RunSpec r;
    const auto need = [&](const char* key) -> const toml::Value& {
      const auto* v = doc_.find("run", key);
      if (!v) throw ConfigError(std::string("[run] needs ") + key);
      return *v;
    };
    r.x0 = vec(need("x0"), "run.x0");
    r.v0 = vec(need("v0"), "run.v0");
    r.t_end = number(need("t_end"), "run.t_end");
    r.dt = number(need("dt"), "run.dt");
    if (!(r.dt > 0.0) || !(r.t_end > 0.0) || r.dt > r.t_end)
      throw ConfigError("run needs 0 < dt <= t_end");
    return r;
  }

  SampleBox box() const {
    SampleBox b = SampleBox::cube(n_, 0.5, 2.0, 100);
    if (const auto* v = doc_.find("sample_box", "lo")) b.lo = numbers(*v, "sample_box.lo");
    if (const auto* v = doc_.find("sample_box", "hi")) b.hi = numbers(*v, "sample_box.hi");
    if (const auto* v = doc_.find("sample_box", "vlo")) b.vlo = numbers(*v, "sample_box.vlo");
    if (const auto* v = doc_.find("sample_box", "vhi")) b.vhi = numbers(*v, "sample_box.vhi");
    if (b.vlo.empty() != b.vhi.empty()) throw ConfigError("sample_box needs both vlo and vhi");
    if (const auto* v = doc_.find("sample_box", "count")) {
      const double c = number(*v, "sample_box.count");
      if (c < 1 || c != static_cast<double>(static_cast<std::size_t>(c)))
        throw ConfigError("sample_box.count must be a positive integer");
      b.count = static_cast<std::size_t>(c);
    }
    for (std::size_t i = 0; i < n_; ++i)
      if (!(b.lo[i] <= b.hi[i])) throw ConfigError("sample_box.lo must not exceed sample_box.hi");
    return b;
  }

  const toml::Document& doc_;
  std::size_t n_ = 0;
};

}  // namespace detail

inline Scenario parse_scenario(std::string_view text) {
  const toml::Document doc = toml::parse(text);
  return detail::ScenarioBuilder(doc).build();
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str());
  if (s.name.empty()) {
    const auto slash = path.find_last_of('/');
    s.name = slash == std::string::npos ? path : path.substr(slash + 1);
  }
  return s;
}

}  // namespace geomech
