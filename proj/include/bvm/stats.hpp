#pragma once

#include <cstddef>
#include <span>

namespace bvm {

[[nodiscard]] double normal_cdf(double x);
[[nodiscard]] double normal_pdf(double x);
[[nodiscard]] double normal_quantile(double p);

/// q with P(|Z| <= q) = level.
[[nodiscard]] double two_sided_normal_quantile(double level);

struct WilsonInterval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval for `hits` successes in `n` trials at the given
/// two-sided confidence (default 95%).
[[nodiscard]] WilsonInterval wilson_interval(std::size_t hits, std::size_t n, double confidence = 0.95);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope x; needs >= 2 points with
/// distinct x.
[[nodiscard]] LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

[[nodiscard]] double sample_mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance.
[[nodiscard]] double sample_variance(std::span<const double> x);

}  // namespace bvm
