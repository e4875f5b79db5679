#include "tokenopt/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace tokenopt {

LinearFit fit_linear(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t m = xs.size();
  if (m != ys.size() || m < 2) throw std::invalid_argument("fit_linear: need >= 2 paired points");
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_linear: degenerate x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += e * e;
  }
  fit.r2 = syy == 0.0 ? 1.0 : 1.0 - ssr / syy;
  fit.stderr_slope = m > 2 ? std::sqrt(ssr / (m - 2) / sxx) : 0.0;
  return fit;
}

LinearFit fit_loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() < 3) throw std::invalid_argument("fit_loglog_slope: need >= 3 points");
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("fit_loglog_slope: inputs must be positive");
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
  }
  return fit_linear(lx, ly);
}

AggregateStats aggregate_traces(const std::vector<Trace>& traces) {
  if (traces.empty()) throw std::invalid_argument("aggregate_traces: no traces");
  const std::size_t rows = traces.front().records.size();
  for (const auto& tr : traces)
    if (tr.records.size() != rows)
      throw std::invalid_argument("aggregate_traces: traces have mismatched logging grids");
  AggregateStats out;
  out.rows.resize(rows);
  const double n = static_cast<double>(traces.size());
  for (std::size_t r = 0; r < rows; ++r) {
    AggregateRow& row = out.rows[r];
    row.t = traces.front().records[r].t;
    row.comms = traces.front().records[r].comms;
    double sf = 0.0, sf2 = 0.0, sg = 0.0, sg2 = 0.0;
    for (const auto& tr : traces) {
      sf += tr.records[r].f_gap;
      sf2 += tr.records[r].f_gap * tr.records[r].f_gap;
      sg += tr.records[r].grad_norm_sq;
      sg2 += tr.records[r].grad_norm_sq * tr.records[r].grad_norm_sq;
    }
    row.f_gap_mean = sf / n;
    row.grad_mean = sg / n;
    if (traces.size() >= 2) {
      row.f_gap_sd = std::sqrt(std::max(0.0, (sf2 - n * row.f_gap_mean * row.f_gap_mean) / (n - 1)));
      row.grad_sd = std::sqrt(std::max(0.0, (sg2 - n * row.grad_mean * row.grad_mean) / (n - 1)));
    }
  }
  for (const auto& tr : traces) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rec : tr.records) best = std::min(best, rec.grad_norm_sq);
    out.min_grad_per_seed.push_back(best);
  }
  return out;
}

}  // namespace tokenopt
