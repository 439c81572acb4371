#include "selfdual/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace selfdual::cli {

using nlohmann::json;

std::string ConfigError::format(const std::string& source) const {
  std::ostringstream os;
  os << source;
  if (line_ > 0) os << ':' << line_;
  os << ": ";
  if (!pointer_.empty()) os << pointer_ << ": ";
  os << what();
  return os.str();
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"check-selfdual", "fitzpatrick", "potential", "solve",
                                              "resolvent",      "evolve",      "semigroup", "connect",
                                              "elliptic",       "parabolic",   "inverse"};
  return names;
}

// ---------------------------------------------------------------- locating lines

namespace {

/// Walks a JSON text and stops at the value with the wanted pointer.
struct LineScanner {
  const std::string& s;
  const std::string& want;
  std::size_t i = 0;
  int line = 1;
  int found = 0;

  void ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) {
      if (s[i] == '\n') ++line;
      ++i;
    }
  }
  std::string str() {
    std::string out;
    ++i;
    while (i < s.size() && s[i] != '"') {
      if (s[i] == '\\' && i + 1 < s.size()) ++i;
      out += s[i++];
    }
    ++i;
    return out;
  }
  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~')
        out += "~0";
      else if (c == '/')
        out += "~1";
      else
        out += c;
    }
    return out;
  }
  bool value(const std::string& path) {
    ws();
    if (i >= s.size()) return false;
    if (path == want) {
      found = line;
      return true;
    }
    if (s[i] == '{') {
      ++i;
      for (;;) {
        ws();
        if (i >= s.size()) return false;
        if (s[i] == '}') {
          ++i;
          return false;
        }
        if (s[i] != '"') return false;
        const std::string key = str();
        ws();
        if (i >= s.size() || s[i] != ':') return false;
        ++i;
        if (value(path + "/" + escape(key))) return true;
        ws();
        if (i < s.size() && s[i] == ',') ++i;
      }
    }
    if (s[i] == '[') {
      ++i;
      for (int idx = 0;; ++idx) {
        ws();
        if (i >= s.size()) return false;
        if (s[i] == ']') {
          ++i;
          return false;
        }
        if (value(path + "/" + std::to_string(idx))) return true;
        ws();
        if (i < s.size() && s[i] == ',') ++i;
      }
    }
    if (s[i] == '"') {
      str();
      return false;
    }
    while (i < s.size() && !std::strchr(",]} \t\r\n", s[i])) ++i;
    return false;
  }
};

int line_at_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t k = 0; k < text.size() && k + 1 < byte; ++k)
    if (text[k] == '\n') ++line;
  return line;
}

}  // namespace

int line_of(const std::string& text, const std::string& pointer) {
  LineScanner sc{text, pointer};
  sc.value("");
  return sc.found;
}

// ---------------------------------------------------------------- field access

namespace {

[[noreturn]] void bad(const std::string& at, const std::string& what) { throw ConfigError(at, what); }

std::string child(const std::string& at, const std::string& key) { return at + "/" + key; }

const json& need(const json& j, const std::string& at, const std::string& key) {
  if (!j.is_object()) bad(at, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) bad(at, "missing field '" + key + "'");
  return *it;
}

bool has(const json& j, const std::string& key) { return j.is_object() && j.contains(key); }

double number(const json& j, const std::string& at, const std::string& key, std::optional<double> def = {}) {
  if (!has(j, key)) {
    if (def) return *def;
    need(j, at, key);
  }
  const json& v = j.at(key);
  if (!v.is_number()) bad(child(at, key), "expected a number");
  return v.get<double>();
}

int integer(const json& j, const std::string& at, const std::string& key, std::optional<int> def = {}) {
  if (!has(j, key)) {
    if (def) return *def;
    need(j, at, key);
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) bad(child(at, key), "expected an integer");
  return v.get<int>();
}

std::string text(const json& j, const std::string& at, const std::string& key,
                 std::optional<std::string> def = {}) {
  if (!has(j, key)) {
    if (def) return *def;
    need(j, at, key);
  }
  const json& v = j.at(key);
  if (!v.is_string()) bad(child(at, key), "expected a string");
  return v.get<std::string>();
}

Vec vec(const json& j, const std::string& at, const std::string& key) {
  const json& v = need(j, at, key);
  try {
    return json_vec(v);
  } catch (const Error& e) {
    bad(child(at, key), e.what());
  }
}

Mat mat(const json& j, const std::string& at, const std::string& key) {
  const json& v = need(j, at, key);
  try {
    return json_mat(v);
  } catch (const Error& e) {
    bad(child(at, key), e.what());
  }
}

const json& array(const json& j, const std::string& at, const std::string& key) {
  const json& v = need(j, at, key);
  if (!v.is_array() || v.empty()) bad(child(at, key), "expected a non-empty array");
  return v;
}

/// Rows of a point list; a flat array of numbers is a list of one-dimensional points.
std::vector<Vec> points(const json& j, const std::string& at, const std::string& key) {
  const json& v = array(j, at, key);
  std::vector<Vec> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    try {
      out.push_back(json_vec(v[k]));
    } catch (const Error& e) {
      bad(child(child(at, key), std::to_string(k)), e.what());
    }
  }
  return out;
}

/// Runs a builder, turning library errors into errors at the given location.
template <class F>
auto guarded(const std::string& at, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    bad(at, e.what());
  }
}

Mat default_linear_positive() {
  Mat B(2, 2);
  B << 1.0, -1.0, 1.0, 1.0;
  return B;
}

Mat rotation_skew() {
  Mat G(2, 2);
  G << 0.0, -1.0, 1.0, 0.0;
  return G;
}

}  // namespace

// ---------------------------------------------------------------- builders

ConvexFunction build_function(const json& j, const std::string& at) {
  const std::string type = text(j, at, "type");
  return guarded(at, [&]() -> ConvexFunction {
    if (type == "quadratic") {
      const Mat Q = mat(j, at, "Q");
      const Vec b = has(j, "b") ? vec(j, at, "b") : Vec::Zero(Q.rows());
      return ConvexFunction::quadratic(Q, b, number(j, at, "c", 0.0));
    }
    if (type == "half_squared_norm") return ConvexFunction::half_squared_norm(integer(j, at, "dim", 1));
    if (type == "zero") return ConvexFunction::zero(integer(j, at, "dim", 1));
    if (type == "power_norm")
      return ConvexFunction::power_norm(number(j, at, "r"), number(j, at, "scale", 1.0), integer(j, at, "dim", 1));
    if (type == "abs_value") return ConvexFunction::abs_value(number(j, at, "scale", 1.0), integer(j, at, "dim", 1));
    if (type == "indicator_box") return ConvexFunction::indicator_box(vec(j, at, "lower"), vec(j, at, "upper"));
    if (type == "support_box") return ConvexFunction::support_box(vec(j, at, "lower"), vec(j, at, "upper"));
    if (type == "indicator_ball")
      return ConvexFunction::indicator_ball(number(j, at, "radius"), integer(j, at, "dim", 1));
    if (type == "indicator_point") return ConvexFunction::indicator_point(vec(j, at, "point"));
    if (type == "sum") {
      const json& terms = array(j, at, "terms");
      const std::string tat = child(at, "terms");
      ConvexFunction f = build_function(terms[0], tat + "/0");
      for (std::size_t k = 1; k < terms.size(); ++k)
        f = ConvexFunction::sum(f, build_function(terms[k], tat + "/" + std::to_string(k)));
      return f;
    }
    if (type == "scaled")
      return ConvexFunction::scaled(build_function(need(j, at, "of"), child(at, "of")), number(j, at, "factor"));
    if (type == "shifted")
      return ConvexFunction::shifted(build_function(need(j, at, "of"), child(at, "of")), vec(j, at, "shift"));
    if (type == "tilt")
      return ConvexFunction::tilt(build_function(need(j, at, "of"), child(at, "of")), vec(j, at, "slope"));
    bad(child(at, "type"), "unknown function type '" + type + "'");
  });
}

MonotoneOperator build_operator(const json& j, const std::string& at) {
  const std::string type = text(j, at, "type");
  return guarded(at, [&]() -> MonotoneOperator {
    if (type == "identity")
      return MonotoneOperator::grad_convex(ConvexFunction::half_squared_norm(integer(j, at, "dim", 1)));
    if (type == "gradient") return MonotoneOperator::grad_convex(build_function(need(j, at, "phi"), child(at, "phi")));
    if (type == "skew_plus_gradient")
      return MonotoneOperator::skew_plus_grad(mat(j, at, "gamma"),
                                              build_function(need(j, at, "phi"), child(at, "phi")));
    if (type == "rotation")
      return MonotoneOperator::skew_plus_grad(rotation_skew(), ConvexFunction::half_squared_norm(2));
    if (type == "linear")
      return MonotoneOperator::linear_positive(has(j, "B") ? mat(j, at, "B") : default_linear_positive());
    if (type == "cubic") {
      const double a = number(j, at, "linear", 1.0), b = number(j, at, "cubic", 1.0);
      if (a < 0.0 || b < 0.0) bad(at, "cubic coefficients must be non-negative");
      const ConvexFunction quad = ConvexFunction::quadratic(Mat::Constant(1, 1, a), Vec::Zero(1));
      if (b == 0.0) return MonotoneOperator::grad_convex(quad);
      const ConvexFunction quart = ConvexFunction::power_norm(4.0, b, 1);
      if (a == 0.0) return MonotoneOperator::grad_convex(quart);
      return MonotoneOperator::grad_convex(ConvexFunction::sum(quad, quart));
    }
    if (type == "sampled") {
      const std::vector<Vec> x = points(j, at, "x"), p = points(j, at, "p");
      if (x.size() != p.size()) bad(at, "x and p must list the same number of points");
      MonotoneGraph g;
      for (std::size_t k = 0; k < x.size(); ++k) g.add(x[k], p[k]);
      return MonotoneOperator::sampled(std::move(g));
    }
    if (type == "sampled_1d") {
      const MonotoneOperator T = build_operator(need(j, at, "of"), child(at, "of"));
      if (T.dim() != 1) bad(child(at, "of"), "sampled_1d needs an operator on R^1");
      const int n = integer(j, at, "points", 81);
      const double lo = number(j, at, "lower", -2.0), hi = number(j, at, "upper", 2.0);
      if (n < 2 || !(lo < hi)) bad(at, "need at least two points on a non-empty interval");
      MonotoneGraph g;
      for (int k = 0; k < n; ++k) {
        const Vec x = Vec::Constant(1, lo + (hi - lo) * k / (n - 1));
        const auto p = T.apply(x);
        if (!p) bad(child(at, "of"), "operator is not single-valued at the sample nodes");
        g.add(x, *p);
      }
      return MonotoneOperator::sampled(std::move(g));
    }
    if (type == "sum") {
      const json& terms = array(j, at, "terms");
      const std::string tat = child(at, "terms");
      MonotoneOperator T = build_operator(terms[0], tat + "/0");
      for (std::size_t k = 1; k < terms.size(); ++k)
        T = MonotoneOperator::sum(T, build_operator(terms[k], tat + "/" + std::to_string(k)));
      return T;
    }
    if (type == "scaled")
      return MonotoneOperator::scaled(number(j, at, "factor"), build_operator(need(j, at, "of"), child(at, "of")));
    bad(child(at, "type"), "unknown operator type '" + type + "'");
  });
}

namespace {

TransformSpec build_transform(const json& j, const std::string& at) {
  const std::string kind = text(j, at, "kind");
  if (kind == "scale") return TransformSpec::scale(number(j, at, "factor"));
  if (kind == "translate_domain") return TransformSpec::translate_domain(vec(j, at, "vector"));
  if (kind == "translate_range") return TransformSpec::translate_range(vec(j, at, "vector"));
  if (kind == "unitary") return TransformSpec::unitary(mat(j, at, "matrix"));
  if (kind == "add_skew") return TransformSpec::add_skew(mat(j, at, "matrix"));
  if (kind == "twist_invert") return TransformSpec::twist_invert(mat(j, at, "matrix"));
  if (kind == "scale_range") return TransformSpec::scale_range(number(j, at, "factor"));
  if (kind == "inverse") return TransformSpec::inverse();
  bad(child(at, "kind"), "unknown transform '" + kind + "'");
}

CombineSpec build_combine(const json& j, const std::string& at) {
  const std::string kind = text(j, at, "kind");
  if (kind == "direct_sum") return CombineSpec::direct_sum();
  if (kind == "op_sum") return CombineSpec::op_sum();
  if (kind == "op_convolve") return CombineSpec::op_convolve();
  if (kind == "cross_coupling") return CombineSpec::cross_coupling(mat(j, at, "coupling"));
  if (kind == "block_superpose") {
    const json& blocks = array(j, at, "blocks");
    std::vector<std::pair<Mat, Mat>> out;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const std::string bat = child(at, "blocks") + "/" + std::to_string(k);
      out.emplace_back(mat(blocks[k], bat, "A"), mat(blocks[k], bat, "Gamma"));
    }
    return CombineSpec::block_superpose(std::move(out));
  }
  bad(child(at, "kind"), "unknown combination '" + kind + "'");
}

}  // namespace

Lagrangian build_lagrangian(const json& j, const std::string& at) {
  const std::string type = text(j, at, "type");
  return guarded(at, [&]() -> Lagrangian {
    if (type == "potential") return potential_for(build_operator(need(j, at, "operator"), child(at, "operator")));
    if (type == "sum_form")
      return Lagrangian::sum_form(build_function(need(j, at, "phi"), child(at, "phi")),
                                  has(j, "gamma") ? mat(j, at, "gamma") : Mat());
    if (type == "fitzpatrick") {
      const MonotoneOperator T = build_operator(need(j, at, "graph"), child(at, "graph"));
      if (T.kind() != MonotoneOperator::Kind::Sampled) bad(child(at, "graph"), "expected a sampled operator");
      return fitzpatrick(T.graph());
    }
    if (type == "proximal_average") return proximal_average(build_lagrangian(need(j, at, "of"), child(at, "of")));
    if (type == "transform")
      return transform(build_lagrangian(need(j, at, "of"), child(at, "of")), build_transform(j, at));
    if (type == "combine") {
      const json& parts = array(j, at, "parts");
      std::vector<Lagrangian> Ls;
      for (std::size_t k = 0; k < parts.size(); ++k)
        Ls.push_back(build_lagrangian(parts[k], child(at, "parts") + "/" + std::to_string(k)));
      return combine(Ls, build_combine(j, at));
    }
    if (type == "catalog") {
      const std::string name = text(j, at, "name");
      if (name == "identity") return Lagrangian::sum_form(ConvexFunction::half_squared_norm(integer(j, at, "dim", 1)));
      if (name == "quartic") return Lagrangian::sum_form(ConvexFunction::power_norm(4.0, 1.0, 1));
      if (name == "skew_r2") return Lagrangian::sum_form(ConvexFunction::half_squared_norm(2), rotation_skew());
      if (name == "linear_positive")
        return potential_for(
            MonotoneOperator::linear_positive(has(j, "B") ? mat(j, at, "B") : default_linear_positive()));
      bad(child(at, "name"), "unknown catalog entry '" + name + "'");
    }
    bad(child(at, "type"), "unknown Lagrangian type '" + type + "'");
  });
}

Vec build_mesh_data(const json& j, const std::string& at, const Mesh1D& mesh) {
  if (j.is_number()) return Vec::Constant(mesh.n, j.get<double>());
  if (j.is_array()) {
    Vec v;
    try {
      v = json_vec(j);
    } catch (const Error& e) {
      bad(at, e.what());
    }
    if (v.size() != mesh.n) bad(at, "expected " + std::to_string(mesh.n) + " nodal values");
    return v;
  }
  if (!j.is_object()) bad(at, "expected a number, an array of nodal values or an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "constant" && it.key() != "poly" && it.key() != "sine")
      bad(child(at, it.key()), "unknown term; use constant, poly or sine");
  const double c = number(j, at, "constant", 0.0);
  const Vec poly = has(j, "poly") ? vec(j, at, "poly") : Vec();
  std::vector<std::pair<double, double>> sines;
  if (has(j, "sine")) {
    const json& s = array(j, at, "sine");
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::string sat = child(at, "sine") + "/" + std::to_string(k);
      sines.emplace_back(number(s[k], sat, "amplitude", 1.0), number(s[k], sat, "mode", 1.0));
    }
  }
  const double len = mesh.length;
  return mesh.sample([&](double x) {
    double v = c, xp = 1.0;
    for (int i = 0; i < poly.size(); ++i, xp *= x) v += poly[i] * xp;
    for (const auto& [a, k] : sines) v += a * std::sin(k * M_PI * x / len);
    return v;
  });
}

// ---------------------------------------------------------------- config files

ExperimentConfig parse_config(const std::string& text_in, const std::string& source, const std::string& command) {
  ExperimentConfig cfg;
  cfg.source = source;
  cfg.text = text_in;
  json doc;
  try {
    doc = json::parse(text_in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", e.what(), line_at_byte(text_in, e.byte));
  }
  auto located = [&](const ConfigError& e) {
    return ConfigError(e.pointer(), e.what(), e.line() ? e.line() : line_of(text_in, e.pointer()));
  };
  try {
    if (!doc.is_object()) bad("", "config must be a JSON object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      static const char* known[] = {"command", "problem", "output", "tolerances", "seed"};
      if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known))
        bad("/" + it.key(), "unknown top-level field");
    }
    cfg.command = command.empty() ? text(doc, "", "command") : command;
    if (std::find(commands().begin(), commands().end(), cfg.command) == commands().end())
      bad(has(doc, "command") && command.empty() ? "/command" : "", "unknown command '" + cfg.command + "'");
    if (has(doc, "problem")) {
      if (!doc["problem"].is_object()) bad("/problem", "expected an object");
      cfg.problem = doc["problem"];
    }
    if (has(doc, "output")) {
      const json& o = doc["output"];
      if (!o.is_object()) bad("/output", "expected an object");
      cfg.report_path = text(o, "/output", "report", std::string());
      cfg.csv_path = text(o, "/output", "csv", std::string());
    }
    if (has(doc, "tolerances")) {
      const json& t = doc["tolerances"];
      if (!t.is_object()) bad("/tolerances", "expected an object");
      for (auto it = t.begin(); it != t.end(); ++it)
        if (!it->is_number() || !(it->get<double>() > 0.0)) bad("/tolerances/" + it.key(), "expected a positive number");
      cfg.tolerances = t;
    }
    if (has(doc, "seed")) {
      if (!doc["seed"].is_number_unsigned()) bad("/seed", "expected a non-negative integer");
      cfg.seed = doc["seed"].get<std::uint64_t>();
    }
  } catch (const ConfigError& e) {
    throw located(e);
  }
  if (const auto s = seed_from_env()) cfg.seed = *s;
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, command);
}

std::optional<std::uint64_t> seed_from_env() {
  const char* s = std::getenv("SELFdual_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') return std::nullopt;
  return static_cast<std::uint64_t>(v);
}

// ---------------------------------------------------------------- catalog

json catalog() {
  return {
      {"lagrangians",
       {{{"type", "catalog"}, {"name", "identity"}, {"params", {"dim"}}, {"field", "x"}},
        {{"type", "catalog"}, {"name", "quartic"}, {"params", json::array()}, {"field", "x^3"}},
        {{"type", "catalog"}, {"name", "skew_r2"}, {"params", json::array()}, {"field", "x + Jx, J a quarter turn"}},
        {{"type", "catalog"}, {"name", "linear_positive"}, {"params", {"B"}}, {"field", "Bx, B = [[1,-1],[1,1]]"}},
        {{"type", "potential"}, {"params", {"operator"}}},
        {{"type", "sum_form"}, {"params", {"phi", "gamma"}}},
        {{"type", "fitzpatrick"}, {"params", {"graph"}}},
        {{"type", "proximal_average"}, {"params", {"of"}}},
        {{"type", "transform"},
         {"params", {"of", "kind", "factor", "vector", "matrix"}},
         {"kinds",
          {"scale", "translate_domain", "translate_range", "unitary", "add_skew", "twist_invert", "scale_range",
           "inverse"}}},
        {{"type", "combine"},
         {"params", {"parts", "kind", "coupling", "blocks"}},
         {"kinds", {"direct_sum", "op_sum", "op_convolve", "cross_coupling", "block_superpose"}}}}},
      {"operators",
       {{{"type", "identity"}, {"params", {"dim"}}},
        {{"type", "gradient"}, {"params", {"phi"}}},
        {{"type", "skew_plus_gradient"}, {"params", {"gamma", "phi"}}},
        {{"type", "rotation"}, {"params", json::array()}},
        {{"type", "linear"}, {"params", {"B"}}},
        {{"type", "cubic"}, {"params", {"linear", "cubic"}}},
        {{"type", "sampled"}, {"params", {"x", "p"}}},
        {{"type", "sampled_1d"}, {"params", {"of", "lower", "upper", "points"}}},
        {{"type", "sum"}, {"params", {"terms"}}},
        {{"type", "scaled"}, {"params", {"factor", "of"}}}}},
      {"functions",
       {{{"type", "quadratic"}, {"params", {"Q", "b", "c"}}},
        {{"type", "half_squared_norm"}, {"params", {"dim"}}},
        {{"type", "zero"}, {"params", {"dim"}}},
        {{"type", "power_norm"}, {"params", {"r", "scale", "dim"}}},
        {{"type", "abs_value"}, {"params", {"scale", "dim"}}},
        {{"type", "indicator_box"}, {"params", {"lower", "upper"}}},
        {{"type", "support_box"}, {"params", {"lower", "upper"}}},
        {{"type", "indicator_ball"}, {"params", {"radius", "dim"}}},
        {{"type", "indicator_point"}, {"params", {"point"}}},
        {{"type", "sum"}, {"params", {"terms"}}},
        {{"type", "scaled"}, {"params", {"factor", "of"}}},
        {{"type", "shifted"}, {"params", {"shift", "of"}}},
        {{"type", "tilt"}, {"params", {"slope", "of"}}}}},
      {"mesh_data", {{"forms", {"number", "array of nodal values", "{constant, poly, sine: [{amplitude, mode}]}"}}}},
      {"commands", commands()}};
}

}  // namespace selfdual::cli
