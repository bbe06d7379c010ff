#pragma once

// Two-class softmax regression with one weight vector per class, i.e.
// D = 2 * features, and an isotropic normal prior on all weights.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "habc/rng.hpp"
#include "habc/types.hpp"

namespace habc {

struct LogisticRegressionTarget {
  std::vector<double> features;  // row-major, rows() x num_features
  std::vector<int> labels;       // 0 or 1
  std::size_t num_features = 0;
  double prior_sd = 1.0;

  std::size_t rows() const { return labels.size(); }
  std::size_t dim() const { return 2 * num_features; }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * num_features, num_features};
  }

  void validate() const {
    if (labels.empty()) throw precondition_error("logistic target needs N >= 1");
    if (num_features == 0) throw precondition_error("logistic target needs at least one feature");
    check_same_dim(features.size(), labels.size() * num_features, "logistic target features");
    for (int l : labels) {
      if (l != 0 && l != 1) throw std::invalid_argument("logistic target labels must be 0 or 1");
    }
    for (double v : features) {
      if (!std::isfinite(v)) throw std::domain_error("logistic target has non-finite feature");
    }
  }
};

namespace detail {

inline void check_batch(const LogisticRegressionTarget& target, const ParameterVector& theta,
                        std::span<const std::size_t> batch) {
  check_same_dim(theta.size(), target.dim(), "logistic weights");
  if (batch.empty()) throw precondition_error("mini-batch must not be empty");
  for (std::size_t i : batch) {
    if (i >= target.rows()) throw shape_error("mini-batch index out of range");
  }
}

// log p(label | x) and, optionally, accumulate scale * d/dw of it into grad.
inline double example_loglik(const LogisticRegressionTarget& target, const ParameterVector& w, std::size_t i,
                             double scale, Vector* grad) {
  const auto x = target.row(i);
  const std::size_t f = target.num_features;
  double z0 = 0.0, z1 = 0.0;
  for (std::size_t k = 0; k < f; ++k) {
    z0 += w[k] * x[k];
    z1 += w[f + k] * x[k];
  }
  const double hi = std::max(z0, z1);
  const double lse = hi + std::log(std::exp(z0 - hi) + std::exp(z1 - hi));
  const int y = target.labels[i];
  if (grad != nullptr) {
    const double p1 = std::exp(z1 - lse);
    const double r1 = (y == 1 ? 1.0 : 0.0) - p1;
    // r0 = -r1 for two classes
    for (std::size_t k = 0; k < f; ++k) {
      (*grad)[k] -= scale * r1 * x[k];
      (*grad)[f + k] += scale * r1 * x[k];
    }
  }
  return (y == 1 ? z1 : z0) - lse;
}

}  // namespace detail

inline double logistic_log_prior(const LogisticRegressionTarget& target, const ParameterVector& w) {
  const double s2 = target.prior_sd * target.prior_sd;
  double q = 0.0;
  for (double v : w) q += v * v;
  return -0.5 * q / s2 - 0.5 * static_cast<double>(w.size()) * std::log(2.0 * std::numbers::pi * s2);
}

/// (N/n)-scaled mini-batch log-likelihood, without the prior. This is the
/// black-box objective handed to SPSA.
inline double logreg_minibatch_loglik(const LogisticRegressionTarget& target, const ParameterVector& theta,
                                      std::span<const std::size_t> batch) {
  detail::check_batch(target, theta, batch);
  const double scale = static_cast<double>(target.rows()) / static_cast<double>(batch.size());
  double total = 0.0;
  for (std::size_t i : batch) total += detail::example_loglik(target, theta, i, 0.0, nullptr);
  return scale * total;
}

/// Scaled mini-batch log-likelihood plus log prior, and its exact gradient.
inline std::pair<double, Vector> logreg_minibatch_loglik_and_grad(const LogisticRegressionTarget& target,
                                                                  const ParameterVector& theta,
                                                                  std::span<const std::size_t> batch) {
  detail::check_batch(target, theta, batch);
  const double scale = static_cast<double>(target.rows()) / static_cast<double>(batch.size());
  Vector grad(theta.size(), 0.0);
  double total = 0.0;
  for (std::size_t i : batch) total += detail::example_loglik(target, theta, i, scale, &grad);
  const double s2 = target.prior_sd * target.prior_sd;
  for (std::size_t k = 0; k < theta.size(); ++k) grad[k] -= theta[k] / s2;
  return {scale * total + logistic_log_prior(target, theta), std::move(grad)};
}

inline std::vector<std::size_t> full_batch(const LogisticRegressionTarget& target) {
  std::vector<std::size_t> b(target.rows());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = i;
  return b;
}

/// Uniform integer in [0, bound) by multiply-shift.
inline std::uint64_t uniform_index(Stream& stream, std::uint64_t bound) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(stream.next_u64()) * bound) >> 64);
}

/// n distinct indices from [0, population), partial Fisher-Yates.
inline std::vector<std::size_t> sample_minibatch(std::size_t population, std::size_t n, Stream& stream) {
  if (n == 0 || n > population) throw precondition_error("sample_minibatch: need 1 <= n <= population");
  std::vector<std::size_t> idx(population);
  for (std::size_t i = 0; i < population; ++i) idx[i] = i;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + uniform_index(stream, population - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  return idx;
}

/// MAP estimate by mini-batch SGD on the exact gradient, step size
/// lr0 / (1 + t / decay), returning the average of the second half of the
/// iterates.
inline ParameterVector logreg_sgd_map(const LogisticRegressionTarget& target, std::size_t steps, std::size_t batch_size,
                                      double lr0, double decay, Stream& stream) {
  if (steps < 2) throw precondition_error("logreg_sgd_map: steps must be >= 2");
  ParameterVector w(target.dim(), 0.0);
  ParameterVector avg(target.dim(), 0.0);
  std::size_t averaged = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto batch = sample_minibatch(target.rows(), batch_size, stream);
    const auto [value, grad] = logreg_minibatch_loglik_and_grad(target, w, batch);
    (void)value;
    const double lr = lr0 / (1.0 + static_cast<double>(t) / decay);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += lr * grad[k];
    if (2 * t >= steps) {
      ++averaged;
      for (std::size_t k = 0; k < w.size(); ++k) avg[k] += (w[k] - avg[k]) / static_cast<double>(averaged);
    }
  }
  return avg;
}

}  // namespace habc
