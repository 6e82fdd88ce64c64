#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

namespace drivetraits {

// The six per-segment statistics, in canonical column order.
enum class StatId { mean, median, variance, maximum, kurtosis, skewness };

inline constexpr std::size_t kStatCount = 6;
inline constexpr std::array<StatId, kStatCount> kAllStats = {
    StatId::mean,    StatId::median,   StatId::variance,
    StatId::maximum, StatId::kurtosis, StatId::skewness};

std::string_view stat_name(StatId id);

// Missing statistics are encoded as quiet NaN.
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

struct Stats6 {
  double mean = missing_value();
  double median = missing_value();
  double variance = missing_value();
  double maximum = missing_value();
  double kurtosis = missing_value();
  double skewness = missing_value();

  double get(StatId id) const {
    switch (id) {
      case StatId::mean: return mean;
      case StatId::median: return median;
      case StatId::variance: return variance;
      case StatId::maximum: return maximum;
      case StatId::kurtosis: return kurtosis;
      case StatId::skewness: return skewness;
    }
    return missing_value();
  }
};

// Six summary statistics of a sample:
//   mean        arithmetic mean
//   median      midpoint convention for even length
//   variance    sample variance (n-1 denominator), 0 for n == 1
//   maximum     largest sample
//   skewness    adjusted Fisher-Pearson sample skewness; missing for n < 3
//               or zero variance
//   kurtosis    bias-adjusted excess kurtosis (normal -> 0); missing for
//               n < 4 or zero variance
// An empty input yields all six missing.
template <typename Derived>
Stats6 stats6(const Eigen::DenseBase<Derived>& series) {
  using Scalar = typename Derived::Scalar;
  static_assert(std::is_floating_point_v<Scalar>);
  const Eigen::Index n = series.size();
  Stats6 out;
  if (n == 0) return out;

  const auto x = series.derived().array();
  const double nn = static_cast<double>(n);
  const double mean = static_cast<double>(x.template cast<double>().mean());
  out.mean = mean;
  out.maximum = static_cast<double>(x.maxCoeff());

  std::vector<double> sorted(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) sorted[static_cast<std::size_t>(i)] = static_cast<double>(x(i));
  std::sort(sorted.begin(), sorted.end());
  out.median = (n % 2 == 1)
                   ? sorted[static_cast<std::size_t>(n / 2)]
                   : 0.5 * (sorted[static_cast<std::size_t>(n / 2 - 1)] +
                            sorted[static_cast<std::size_t>(n / 2)]);

  if (n == 1) {
    out.variance = 0.0;
    return out;
  }

  const auto centered = x.template cast<double>() - mean;
  const double m2 = centered.square().sum() / nn;
  out.variance = centered.square().sum() / (nn - 1.0);
  if (m2 <= 0.0) return out;  // zero variance: skew/kurtosis stay missing

  if (n >= 3) {
    const double m3 = centered.cube().sum() / nn;
    const double g1 = m3 / std::pow(m2, 1.5);
    out.skewness = g1 * std::sqrt(nn * (nn - 1.0)) / (nn - 2.0);
  }
  if (n >= 4) {
    const double m4 = centered.square().square().sum() / nn;
    const double g2 = m4 / (m2 * m2) - 3.0;
    out.kurtosis =
        ((nn + 1.0) * g2 + 6.0) * (nn - 1.0) / ((nn - 2.0) * (nn - 3.0));
  }
  return out;
}

// Convenience overload for a subset of a series given by frame indices.
Stats6 stats6_at(const Eigen::VectorXd& series, const std::vector<int>& frames);
Stats6 stats6_range(const Eigen::VectorXd& series, int begin, int end);

}  // namespace drivetraits
