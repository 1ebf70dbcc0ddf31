#pragma once

#include <span>
#include <vector>

namespace hbgeo::stats {

/// Linear-interpolation quantile (Hyndman-Fan type 7) of an unsorted sample.
double quantile(std::span<const double> values, double prob);
double quantile_sorted(std::span<const double> sorted, double prob);

double mean(std::span<const double> values);
/// Sample variance (n - 1 denominator); 0 for fewer than 2 values.
double variance(std::span<const double> values);

struct Interval {
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Median and central 95% interval.
Interval summarize95(std::span<const double> values);

}  // namespace hbgeo::stats
