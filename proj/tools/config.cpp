#include "config.hpp"

#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "brw/errors.hpp"

namespace brw::cli {

namespace {

// Accepted keys per table; "" is the top level.
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"", {"seed", "threads", "format", "out", "strict", "model", "classify", "phase", "simulate",
            "diagnose", "spine", "tv", "similarity"}},
      {"model", {"kind", "lattice_cap", "rows"}},
      {"classify", {"lambdas"}},
      {"phase", {"theta", "eta", "resolution"}},
      {"simulate", {"lambda", "gens", "reps", "alpha", "truncate", "cap", "on_cap"}},
      {"diagnose", {"traces", "p", "lag", "tail", "fixed_point", "lambda", "versus", "gens", "reps",
                    "permutations"}},
      {"spine", {"lambda", "alpha", "reps", "steps", "sampler", "paths", "duality_horizon", "tv_alpha",
                 "tv_delta"}},
      {"tv", {"alpha", "delta", "u0", "points", "x_max", "dri", "check"}},
      {"similarity", {"lambda", "gens", "reps", "alpha", "compare", "from_complex"}},
  };
  return s;
}

void validate(const toml::table& root) {
  const auto& s = schema();
  for (const auto& [key, node] : root) {
    const std::string k(key.str());
    if (!s.at("").count(k)) throw ConfigError("unknown configuration key '" + k + "'");
    if (auto it = s.find(k); it != s.end()) {
      const auto* tbl = node.as_table();
      if (!tbl) throw ConfigError("configuration key '" + k + "' must be a table");
      for (const auto& [sub, _] : *tbl)
        if (!it->second.count(std::string(sub.str())))
          throw ConfigError("unknown configuration key '" + k + "." + std::string(sub.str()) + "'");
    }
  }
}

[[noreturn]] void type_error(std::string_view path, const char* want) {
  throw ConfigError("configuration key '" + std::string(path) + "' must be " + want);
}

double as_number(const toml::node& n, std::string_view path) {
  if (auto v = n.value_exact<double>()) return *v;
  if (auto v = n.value_exact<std::int64_t>()) return static_cast<double>(*v);
  type_error(path, "a number");
}

}  // namespace

Config Config::load(const std::string& path) {
  try {
    Config c;
    c.root_ = toml::parse_file(path);
    validate(c.root_);
    return c;
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "invalid configuration " << path << ": " << e.description() << " at line "
        << e.source().begin.line;
    throw ConfigError(msg.str());
  }
}

Config Config::parse(std::string_view text) {
  try {
    Config c;
    c.root_ = toml::parse(text);
    validate(c.root_);
    return c;
  } catch (const toml::parse_error& e) {
    throw ConfigError("invalid configuration: " + std::string(e.description()));
  }
}

std::optional<double> Config::number(std::string_view path) const {
  const auto node = root_.at_path(path);
  if (!node) return std::nullopt;
  return as_number(*node.node(), path);
}

std::optional<std::int64_t> Config::integer(std::string_view path) const {
  const auto node = root_.at_path(path);
  if (!node) return std::nullopt;
  if (auto v = node.value_exact<std::int64_t>()) return *v;
  type_error(path, "an integer");
}

std::optional<std::string> Config::string(std::string_view path) const {
  const auto node = root_.at_path(path);
  if (!node) return std::nullopt;
  if (auto v = node.value_exact<std::string>()) return *v;
  type_error(path, "a string");
}

std::optional<bool> Config::boolean(std::string_view path) const {
  const auto node = root_.at_path(path);
  if (!node) return std::nullopt;
  if (auto v = node.value_exact<bool>()) return *v;
  type_error(path, "a boolean");
}

std::optional<std::vector<double>> Config::numbers(std::string_view path) const {
  const auto node = root_.at_path(path);
  if (!node) return std::nullopt;
  const auto* arr = node.as_array();
  if (!arr) type_error(path, "an array of numbers");
  std::vector<double> out;
  for (const auto& el : *arr) out.push_back(as_number(el, path));
  return out;
}

std::optional<ComplexParam> Config::lambda(std::string_view path) const {
  const auto v = numbers(path);
  if (!v) return std::nullopt;
  if (v->size() != 2) type_error(path, "a pair [theta, eta]");
  return ComplexParam{(*v)[0], (*v)[1]};
}

std::optional<std::vector<ComplexParam>> Config::lambdas(std::string_view path) const {
  const auto node = root_.at_path(path);
  if (!node) return std::nullopt;
  const auto* arr = node.as_array();
  if (!arr) type_error(path, "an array of [theta, eta] pairs");
  std::vector<ComplexParam> out;
  for (const auto& el : *arr) {
    const auto* pair = el.as_array();
    if (!pair || pair->size() != 2) type_error(path, "an array of [theta, eta] pairs");
    out.push_back({as_number(*pair->get(0), path), as_number(*pair->get(1), path)});
  }
  return out;
}

std::optional<std::vector<TableRow>> Config::table_rows(std::string_view path) const {
  const auto node = root_.at_path(path);
  if (!node) return std::nullopt;
  const auto* arr = node.as_array();
  if (!arr) type_error(path, "an array of {prob, x} tables");
  std::vector<TableRow> rows;
  for (const auto& el : *arr) {
    const auto* t = el.as_table();
    if (!t) type_error(path, "an array of {prob, x} tables");
    for (const auto& [k, _] : *t)
      if (k.str() != "prob" && k.str() != "x")
        throw ConfigError("unknown key '" + std::string(k.str()) + "' in " + std::string(path));
    const auto* p = t->get("prob");
    const auto* x = t->get_as<toml::array>("x");
    if (!p || !x) type_error(path, "rows with both 'prob' and 'x'");
    TableRow r;
    r.prob = as_number(*p, path);
    for (const auto& v : *x) r.displacements.push_back(as_number(v, path));
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::string tok;
  std::istringstream in(s);
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + s + "' as a list of numbers");
    }
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

std::pair<double, double> parse_pair(const std::string& s) {
  std::string t = s;
  for (char& c : t)
    if (c == 'x') c = ',';
  const auto v = parse_list(t);
  if (v.size() != 2) throw ConfigError("expected two numbers in '" + s + "'");
  return {v[0], v[1]};
}

ComplexParam parse_lambda(const std::string& s) {
  const auto [th, et] = parse_pair(s);
  return {th, et};
}

}  // namespace brw::cli
