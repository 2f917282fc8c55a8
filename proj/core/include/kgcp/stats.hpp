#pragma once

#include <cstddef>
#include <span>

namespace kgcp {

/// Mean and sample standard deviation (n - 1 denominator; 0 for a single value).
struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

/// Single-pass Welford accumulation.
Summary summarize(std::span<const double> values);

/// Spearman rank correlation; ties get mean ranks. Returns 0 when either
/// side is constant or fewer than two points are given.
double spearman(std::span<const double> x, std::span<const double> y);

/// 3-sigma binomial half-width sqrt(p (1 - p) / n) * 3.
double binomial_band(double p, std::size_t n);

}  // namespace kgcp
