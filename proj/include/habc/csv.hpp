#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "habc/logistic.hpp"

namespace habc {

namespace detail {

inline double parse_double(std::string_view field, const std::string& where) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::runtime_error(where + ": cannot parse '" + std::string(field) + "' as a number");
  }
  return v;
}

inline std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

/// One value per line; blank lines are skipped.
inline std::vector<double> load_series_csv(const std::string& path) {
  auto in = detail::open_or_throw(path);
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(detail::parse_double(line, path + ":" + std::to_string(lineno)));
  }
  return out;
}

/// Rows of `label,feature_1,...,feature_F`. With append_bias a constant
/// 1.0 feature is added to every row.
inline LogisticRegressionTarget load_logistic_csv(const std::string& path, bool append_bias, double prior_sd) {
  auto in = detail::open_or_throw(path);
  LogisticRegressionTarget target;
  target.prior_sd = prior_sd;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    std::vector<double> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(detail::parse_double(rest.substr(0, comma), where));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 2) throw std::runtime_error(where + ": expected label and features");
    const std::size_t f = fields.size() - 1 + (append_bias ? 1 : 0);
    if (target.num_features == 0) target.num_features = f;
    if (f != target.num_features) throw shape_error(where + ": inconsistent feature count");
    target.labels.push_back(static_cast<int>(fields[0]));
    target.features.insert(target.features.end(), fields.begin() + 1, fields.end());
    if (append_bias) target.features.push_back(1.0);
  }
  target.validate();
  return target;
}

}  // namespace habc
