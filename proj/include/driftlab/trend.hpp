/** trend — sliding-window regression accumulators for the batch error series. */
#pragma once

#include <cstdint>
#include <deque>

namespace driftlab {

// Running sums for the OLS slope of R against the batch index t over the
// retained window. Timestamps are consecutive integers, so T and T2 stay
// exact; TR and R are maintained by add/evict recurrences.
struct TrendState {
  int w_max = 30;
  bool adaptive = true;
  double delta_w = 0.002;  // confidence for the halves comparison
  int min_adapt = 10;      // window size before the halves rule engages

  std::deque<std::pair<std::int64_t, double>> window;  // (t, R)
  double tr_sum = 0.0;
  double t_sum = 0.0;
  double r_sum = 0.0;
  double t2_sum = 0.0;
  std::int64_t t = 0;  // batches seen since the last reset

  int n_bar() const { return static_cast<int>(window.size()); }
  void reset();
};

struct TrendUpdate {
  bool shrunk = false;      // window cut to its newer half (in-regime improvement)
  bool drift_step = false;  // level shift the halves rule cannot attribute to learning
  bool step_up = false;     // direction of the halves difference when significant
};

// appends R_t, evicts beyond the window, applies the adaptive halves rule;
// a significant drop that continues the older half's own descent shrinks the
// window, any other significant shift is reported as a drift step
TrendUpdate update_trend(TrendState& state, double r_t);

// OLS slope over the retained window; false when n_bar < 2 or the
// denominator degenerates (treated as Stable upstream)
bool trend_slope(const TrendState& state, double* slope_out);

}  // namespace driftlab
