#pragma once

#include <span>
#include <vector>

#include "tokenopt/optimizers.hpp"

namespace tokenopt {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r2 = 1.0;
};

// ordinary least squares y = intercept + slope * x
LinearFit fit_linear(std::span<const double> xs, std::span<const double> ys);

// OLS on (ln x, ln y); requires >= 3 points, all positive
LinearFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys);

struct AggregateRow {
  std::int64_t t = 0;
  std::int64_t comms = 0;
  double f_gap_mean = 0.0;
  double f_gap_sd = 0.0;
  double grad_mean = 0.0;
  double grad_sd = 0.0;
};

struct AggregateStats {
  std::vector<AggregateRow> rows;
  std::vector<double> min_grad_per_seed;  // min over t of |grad f|^2, per seed
};

// Seed-order-invariant aggregation of aligned traces (same logging grid).
AggregateStats aggregate_traces(const std::vector<Trace>& traces);

}  // namespace tokenopt
