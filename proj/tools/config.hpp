#pragma once

// TOML run configuration. Every accepted key is listed in the schema in
// config.cpp; anything else is rejected so that typos surface as exit code 2.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <toml.hpp>

#include "brw/charfun.hpp"
#include "brw/models.hpp"

namespace brw::cli {

class Config {
 public:
  Config() = default;
  /// Throws ConfigError on unreadable files, syntax errors and unknown keys.
  static Config load(const std::string& path);
  static Config parse(std::string_view text);

  std::optional<double> number(std::string_view path) const;
  std::optional<std::int64_t> integer(std::string_view path) const;
  std::optional<std::string> string(std::string_view path) const;
  std::optional<bool> boolean(std::string_view path) const;
  std::optional<std::vector<double>> numbers(std::string_view path) const;
  /// [θ, η]
  std::optional<ComplexParam> lambda(std::string_view path) const;
  std::optional<std::vector<ComplexParam>> lambdas(std::string_view path) const;
  /// [[model]] table; nullopt when absent.
  std::optional<std::vector<TableRow>> table_rows(std::string_view path) const;

 private:
  toml::table root_;
};

/// "θ,η" → λ; throws ConfigError.
ComplexParam parse_lambda(const std::string& s);
/// "a,b" or "axb" → two numbers; throws ConfigError.
std::pair<double, double> parse_pair(const std::string& s);
std::vector<double> parse_list(const std::string& s);

}  // namespace brw::cli
