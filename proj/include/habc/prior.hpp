#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "habc/types.hpp"

namespace habc {

enum class PriorFamily { gamma, log_normal, normal, poisson };

inline const char* to_string(PriorFamily f) {
  switch (f) {
    case PriorFamily::gamma: return "gamma";
    case PriorFamily::log_normal: return "log_normal";
    case PriorFamily::normal: return "normal";
    case PriorFamily::poisson: return "poisson";
  }
  return "?";
}

inline PriorFamily prior_family_from_string(const std::string& s) {
  if (s == "gamma") return PriorFamily::gamma;
  if (s == "log_normal") return PriorFamily::log_normal;
  if (s == "normal") return PriorFamily::normal;
  if (s == "poisson") return PriorFamily::poisson;
  throw std::invalid_argument("unknown prior family '" + s + "'");
}

/// One independent prior factor.
///
///   gamma       a = shape alpha, b = rate beta
///   log_normal  a = mu, b = sigma of log(x)
///   normal      a = mean, b = standard deviation
///   poisson     a = rate lambda. Density is evaluated at round(x); the
///               gradient comes from the continuous extension
///               x log(lambda) - lambda - lgamma(x + 1).
struct UnivariatePrior {
  PriorFamily family = PriorFamily::normal;
  double a = 0.0;
  double b = 1.0;

  static UnivariatePrior gamma(double shape, double rate) { return {PriorFamily::gamma, shape, rate}; }
  static UnivariatePrior log_normal(double mu, double sigma) { return {PriorFamily::log_normal, mu, sigma}; }
  static UnivariatePrior normal(double mean, double sd) { return {PriorFamily::normal, mean, sd}; }
  static UnivariatePrior poisson(double rate) { return {PriorFamily::poisson, rate, 0.0}; }

  bool in_support(double x) const {
    switch (family) {
      case PriorFamily::gamma:
      case PriorFamily::log_normal: return x > 0.0;
      case PriorFamily::normal: return std::isfinite(x);
      case PriorFamily::poisson: return x > -0.5;
    }
    return false;
  }

  double logpdf(double x) const {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (!in_support(x)) return kNegInf;
    switch (family) {
      case PriorFamily::gamma:
        return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(x) - b * x;
      case PriorFamily::log_normal: {
        const double z = (std::log(x) - a) / b;
        return -std::log(x * b) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
      }
      case PriorFamily::normal: {
        const double z = (x - a) / b;
        return -std::log(b) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
      }
      case PriorFamily::poisson: {
        const double k = std::round(x);
        return k * std::log(a) - a - std::lgamma(k + 1.0);
      }
    }
    return kNegInf;
  }

  /// Continuous density whose derivative grad_logpdf returns. Equals logpdf
  /// for every family but poisson.
  double surrogate_logpdf(double x) const {
    if (family != PriorFamily::poisson) return logpdf(x);
    if (!in_support(x)) return -std::numeric_limits<double>::infinity();
    return x * std::log(a) - a - std::lgamma(x + 1.0);
  }

  double grad_logpdf(double x) const {
    switch (family) {
      case PriorFamily::gamma:
        if (!(x > 0.0)) throw std::domain_error("gamma prior gradient requires x > 0");
        return (a - 1.0) / x - b;
      case PriorFamily::log_normal:
        if (!(x > 0.0)) throw std::domain_error("log-normal prior gradient requires x > 0");
        return -(1.0 + (std::log(x) - a) / (b * b)) / x;
      case PriorFamily::normal:
        return -(x - a) / (b * b);
      case PriorFamily::poisson:
        if (!(x > -0.5)) throw std::domain_error("poisson prior gradient requires x > -0.5");
        return std::log(a) - boost::math::digamma(x + 1.0);
    }
    return 0.0;
  }
};

/// Product of independent per-dimension priors.
struct PriorSpec {
  std::vector<UnivariatePrior> factors;

  std::size_t dim() const { return factors.size(); }
};

/// Exact log prior density; -inf outside the support.
inline double prior_logpdf(const PriorSpec& prior, const ParameterVector& theta) {
  check_same_dim(prior.dim(), theta.size(), "prior_logpdf");
  double total = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double lp = prior.factors[i].logpdf(theta[i]);
    if (lp == -std::numeric_limits<double>::infinity()) return lp;
    total += lp;
  }
  return total;
}

inline bool prior_supports(const PriorSpec& prior, const ParameterVector& theta) {
  check_same_dim(prior.dim(), theta.size(), "prior_supports");
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!prior.factors[i].in_support(theta[i])) return false;
  }
  return true;
}

inline Vector prior_grad_logpdf(const PriorSpec& prior, const ParameterVector& theta) {
  check_same_dim(prior.dim(), theta.size(), "prior_grad_logpdf");
  Vector g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) g[i] = prior.factors[i].grad_logpdf(theta[i]);
  return g;
}

}  // namespace habc
