#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "habc/exp_demo.hpp"
#include "habc/gradients.hpp"
#include "habc/rng.hpp"
#include "habc/types.hpp"

namespace habc {

/// Counters a chain accumulates while it runs.
struct ChainCounters {
  std::size_t sim_calls = 0;
  std::size_t invalid_gradients = 0;
  std::size_t noise_clamps = 0;
  std::size_t boundary_rejections = 0;
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t flips_proposed = 0;
  std::size_t flips_accepted = 0;
};

struct ChainEvent {
  std::size_t step = 0;
  std::string what;
};

/// Retained samples of one chain plus its bookkeeping.
struct ChainTrace {
  std::vector<std::size_t> steps;
  std::vector<Vector> samples;     // T x D
  std::vector<Vector> momenta;     // empty unless the kernel carries momentum
  std::vector<double> thermostat;  // empty unless SGNHT
  std::size_t sim_calls = 0;
  ChainCounters counters;
  std::vector<ChainEvent> events;
  std::string kernel;
  std::string config_snapshot;
  bool failed = false;
  std::string failure;

  std::size_t size() const { return samples.size(); }
  std::size_t dim() const { return samples.empty() ? 0 : samples.front().size(); }

  /// Column `d` of the samples, optionally dropping a leading fraction.
  std::vector<double> column(std::size_t d, double burnin_fraction = 0.0) const {
    const auto skip = static_cast<std::size_t>(std::floor(burnin_fraction * static_cast<double>(samples.size())));
    std::vector<double> out;
    out.reserve(samples.size() - std::min(skip, samples.size()));
    for (std::size_t t = skip; t < samples.size(); ++t) out.push_back(samples[t].at(d));
    return out;
  }
};

/// Bin edges with equal mass under `dist` (first edge 0 quantile, last 1).
template <class Distribution>
std::vector<double> equal_probability_edges(const Distribution& dist, std::size_t bins) {
  if (bins < 1) throw precondition_error("equal_probability_edges: bins must be >= 1");
  std::vector<double> edges(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) edges[k] = dist.quantile(static_cast<double>(k) / static_cast<double>(bins));
  return edges;
}

/// Total variation distance between the histogram of `samples` and the
/// exact bin masses of `dist` over `edges`. Mass outside the outer edges is
/// treated as one extra bin.
template <class Distribution>
double tvd_vs_analytic(std::span<const double> samples, const Distribution& dist, std::span<const double> edges) {
  if (samples.empty()) throw precondition_error("tvd_vs_analytic: empty trace");
  if (edges.size() < 2) throw precondition_error("tvd_vs_analytic: need at least one bin");
  const std::size_t bins = edges.size() - 1;
  std::vector<double> counts(bins, 0.0);
  double outside = 0.0;
  for (double x : samples) {
    if (!(x >= edges.front()) || !(x < edges.back())) {
      outside += 1.0;
      continue;
    }
    const auto it = std::upper_bound(edges.begin(), edges.end(), x);
    const auto k = static_cast<std::size_t>(it - edges.begin()) - 1;
    counts[std::min(k, bins - 1)] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  double total = 0.0;
  double inside_mass = 0.0;
  double prev_cdf = dist.cdf(edges.front());
  for (std::size_t k = 0; k < bins; ++k) {
    const double next_cdf = dist.cdf(edges[k + 1]);
    const double p = next_cdf - prev_cdf;
    inside_mass += p;
    total += std::abs(counts[k] / n - p);
    prev_cdf = next_cdf;
  }
  total += std::abs(outside / n - std::max(0.0, 1.0 - inside_mass));
  return 0.5 * total;
}

/// TVD of coordinate 0 of a trace against `dist` using equal-probability
/// bins, after discarding a burn-in fraction.
template <class Distribution>
double trace_tvd(const ChainTrace& trace, const Distribution& dist, std::size_t bins = 100,
                 double burnin_fraction = 0.1) {
  if (trace.dim() != 1) throw shape_error("trace_tvd needs a one-dimensional trace");
  const auto xs = trace.column(0, burnin_fraction);
  const auto edges = equal_probability_edges(dist, bins);
  return tvd_vs_analytic(xs, dist, edges);
}

/// Uncentred lag-k autocorrelation of the increments theta[t+1] - theta[t],
/// averaged over coordinates. Coordinates that never move contribute 0.
inline double increment_autocorr(const std::vector<Vector>& samples, std::size_t lag) {
  if (samples.size() <= lag + 1) throw precondition_error("increment_autocorr: need T > lag + 1");
  const std::size_t dim = samples.front().size();
  double acc = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    std::vector<double> inc(samples.size() - 1);
    for (std::size_t t = 0; t + 1 < samples.size(); ++t) inc[t] = samples[t + 1][d] - samples[t][d];
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < inc.size(); ++t) {
      den += inc[t] * inc[t];
      if (t + lag < inc.size()) num += inc[t] * inc[t + lag];
    }
    acc += den > 0.0 ? num / den : 0.0;
  }
  return acc / static_cast<double>(dim);
}

inline double increment_autocorr(const ChainTrace& trace, std::size_t lag) {
  return increment_autocorr(trace.samples, lag);
}

/// Frozen 2 x D projection with standard normal entries.
struct ProjectionMatrix {
  std::array<Vector, 2> rows;

  static ProjectionMatrix draw(std::size_t dim, std::uint64_t seed) {
    Stream s = derive_stream(seed, 0);
    ProjectionMatrix p;
    for (auto& r : p.rows) {
      r.resize(dim);
      for (auto& v : r) v = s.normal();
    }
    return p;
  }
  std::size_t dim() const { return rows[0].size(); }
};

/// Samples projected to 2-D, evenly sub-sampled to at most `count` points
/// (count == 0 keeps all).
inline std::vector<std::array<double, 2>> project_2d(const std::vector<Vector>& samples, const ProjectionMatrix& proj,
                                                     std::size_t count = 0) {
  std::vector<std::size_t> idx;
  const std::size_t t_total = samples.size();
  if (count == 0 || count >= t_total) {
    for (std::size_t t = 0; t < t_total; ++t) idx.push_back(t);
  } else {
    for (std::size_t k = 0; k < count; ++k) idx.push_back(k * t_total / count);
  }
  std::vector<std::array<double, 2>> out;
  out.reserve(idx.size());
  for (std::size_t t : idx) {
    check_same_dim(samples[t].size(), proj.dim(), "project_2d");
    std::array<double, 2> p{0.0, 0.0};
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t d = 0; d < proj.dim(); ++d) p[r] += proj.rows[r][d] * samples[t][d];
    }
    out.push_back(p);
  }
  return out;
}

/// Limit S -> infinity of the synthetic-likelihood grad U for the
/// exponential demo at rate theta. The replicate mean and variance are
/// integrated numerically against the Gamma(n, rate n*theta) law of the
/// simulator output; the derivative is a central difference with step h.
inline double exp_demo_sl_limit_grad_U(double theta, double y, int n, double eps, double prior_alpha,
                                       double prior_beta, double h = 1e-6) {
  auto sl_loglik = [&](double rate) {
    const GammaDistribution law(n, n * rate);
    using Quad = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double lo = law.quantile(1e-14);
    const double hi = law.quantile(1.0 - 1e-14);
    auto pdf = [&](double x) { return std::exp(law.logpdf(x)); };
    const double mass = Quad::integrate(pdf, lo, hi, 15, 1e-13);
    const double mean = Quad::integrate([&](double x) { return x * pdf(x); }, lo, hi, 15, 1e-13) / mass;
    const double second = Quad::integrate([&](double x) { return (x - mean) * (x - mean) * pdf(x); }, lo, hi, 15,
                                          1e-13) / mass;
    const double v = second + eps * eps;
    return -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * (y - mean) * (y - mean) / v;
  };
  const double dl = (sl_loglik(theta + h) - sl_loglik(theta - h)) / (2.0 * h);
  const double dprior = (prior_alpha - 1.0) / theta - prior_beta;
  return -(dl + dprior);
}

struct GradientReportRow {
  std::string label;
  std::size_t num_seeds = 0;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t trials = 0;
  std::size_t invalid = 0;
};

struct GradientReport {
  std::vector<GradientReportRow> rows;
  double reference = 0.0;  // S -> infinity synthetic-likelihood gradient
};

/// Tabulates coordinate 0 of each probe (the study is one-dimensional).
inline GradientReport gradient_report(const std::vector<std::pair<std::string, std::size_t>>& labels,
                                      const std::vector<ProbeResult>& probes, double reference) {
  check_same_dim(labels.size(), probes.size(), "gradient_report");
  GradientReport r;
  r.reference = reference;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    r.rows.push_back({labels[i].first, labels[i].second, probes[i].mean.at(0), probes[i].sd.at(0), probes[i].trials,
                      probes[i].invalid});
  }
  return r;
}

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace detail

/// Header `step,theta_0,...,theta_{D-1}`, one row per retained sample,
/// LF line endings, shortest round-trip number formatting.
inline std::string format_trace_csv(const ChainTrace& trace, std::size_t dim) {
  std::string out = "step";
  for (std::size_t d = 0; d < dim; ++d) out += ",theta_" + std::to_string(d);
  out += '\n';
  for (std::size_t t = 0; t < trace.samples.size(); ++t) {
    out += std::to_string(trace.steps[t]);
    for (double v : trace.samples[t]) {
      out += ',';
      detail::append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

inline std::string format_points_csv(const std::vector<std::array<double, 2>>& pts) {
  std::string out = "x,y\n";
  for (const auto& p : pts) {
    detail::append_number(out, p[0]);
    out += ',';
    detail::append_number(out, p[1]);
    out += '\n';
  }
  return out;
}

/// `lower,upper,sample_mass,posterior_mass` per bin.
template <class Distribution>
std::string format_histogram_csv(std::span<const double> samples, const Distribution& dist,
                                 std::span<const double> edges) {
  std::string out = "lower,upper,sample_mass,posterior_mass\n";
  const double n = static_cast<double>(samples.size());
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    double c = 0.0;
    for (double x : samples) c += (x >= edges[k] && x < edges[k + 1]) ? 1.0 : 0.0;
    detail::append_number(out, edges[k]);
    out += ',';
    detail::append_number(out, edges[k + 1]);
    out += ',';
    detail::append_number(out, n > 0 ? c / n : 0.0);
    out += ',';
    detail::append_number(out, dist.cdf(edges[k + 1]) - dist.cdf(edges[k]));
    out += '\n';
  }
  return out;
}

}  // namespace habc
