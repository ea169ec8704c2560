#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace volterra {

/// Pairwise (cascade) summation. The result depends only on the order of
/// `xs`, never on how the values were produced.
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

struct SampleMoments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error() const { return n > 1 ? std::sqrt(variance / static_cast<double>(n)) : 0.0; }
};

inline SampleMoments sample_moments(std::span<const double> xs) {
  SampleMoments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  m.mean = pairwise_sum(xs) / static_cast<double>(m.n);
  if (m.n > 1) {
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - m.mean) * (xs[i] - m.mean);
    m.variance = pairwise_sum(sq) / static_cast<double>(m.n - 1);
  }
  return m;
}

struct EstimatorConfig {
  enum class Kind { mean, median_of_means };
  Kind kind = Kind::mean;
  std::size_t blocks = 32;

  static EstimatorConfig plain() { return {}; }
  static EstimatorConfig median_of_means(std::size_t k) { return {Kind::median_of_means, k}; }
  std::string label() const {
    return kind == Kind::mean ? "mean" : "median_of_means(" + std::to_string(blocks) + ")";
  }
};

/// Location estimate of a sample with its standard error. For the
/// median-of-means variant the error is the asymptotic sd of a median of
/// k block means, sqrt(pi/2) * sd(block means) / sqrt(k).
inline SampleMoments location_estimate(std::span<const double> xs, const EstimatorConfig& cfg) {
  if (cfg.kind == EstimatorConfig::Kind::mean) return sample_moments(xs);
  const std::size_t k = cfg.blocks;
  if (k < 2 || xs.size() < 2 * k)
    throw std::invalid_argument("median of means needs at least two samples per block");
  const std::size_t per = xs.size() / k;
  std::vector<double> block_means(k);
  for (std::size_t b = 0; b < k; ++b)
    block_means[b] = pairwise_sum(xs.subspan(b * per, per)) / static_cast<double>(per);
  const SampleMoments bm = sample_moments(block_means);
  std::vector<double> sorted = block_means;
  std::sort(sorted.begin(), sorted.end());
  const double median = k % 2 == 1 ? sorted[k / 2] : 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
  SampleMoments out;
  out.n = k;
  out.mean = median;
  // variance field holds k * se^2 so that std_error() reproduces the se
  const double se = std::sqrt(std::numbers::pi / 2.0) * std::sqrt(bm.variance / static_cast<double>(k));
  out.variance = se * se * static_cast<double>(k);
  return out;
}

/// An estimate of an L^p norm ||Y||_p from samples of |Y|.
struct NormEstimate {
  double p = 2.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double moment = 0.0;           // estimate of E|Y|^p
  double moment_std_error = 0.0;
  std::size_t n = 0;
  EstimatorConfig estimator{};
};

/// ||Y||_p = (E|Y|^p)^{1/p} with the delta-method error
/// se_norm = m^{1/p - 1} se_m / p.
inline NormEstimate p_norm_estimate(std::span<const double> abs_values, double p,
                                    const EstimatorConfig& cfg = {}) {
  if (!(p > 0.0)) throw std::invalid_argument("p must be positive");
  std::vector<double> powered(abs_values.size());
  for (std::size_t i = 0; i < abs_values.size(); ++i) powered[i] = std::pow(std::abs(abs_values[i]), p);
  const SampleMoments m = location_estimate(powered, cfg);
  NormEstimate out;
  out.p = p;
  out.n = abs_values.size();
  out.estimator = cfg;
  out.moment = std::max(m.mean, 0.0);
  out.moment_std_error = m.std_error();
  out.estimate = std::pow(out.moment, 1.0 / p);
  out.std_error = out.moment > 0.0
                      ? std::pow(out.moment, 1.0 / p - 1.0) * out.moment_std_error / p
                      : 0.0;
  return out;
}

/// Ordinary least squares y = intercept + slope * x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  double residual_sd = 0.0;
  std::size_t dof = 0;

  /// Two-sided confidence interval for the slope from the residual variance.
  std::pair<double, double> slope_interval(double level = 0.95) const {
    if (dof == 0) return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    boost::math::students_t dist(static_cast<double>(dof));
    const double tq = boost::math::quantile(dist, 0.5 + level / 2.0);
    return {slope - tq * slope_std_error, slope + tq * slope_std_error};
  }
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs two or more paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_line needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.dof = x.size() - 2;
  if (fit.dof > 0) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    fit.residual_sd = std::sqrt(rss / static_cast<double>(fit.dof));
    fit.slope_std_error = fit.residual_sd / std::sqrt(sxx);
  }
  return fit;
}

/// Log-log OLS fit; all inputs must be positive.
inline LinearFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("power-law fit needs positive data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

}  // namespace volterra
