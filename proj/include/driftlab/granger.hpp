/** granger — causality test between adjacent slope-history segments. */
#pragma once

#include <vector>

namespace driftlab {

struct GrangerResult {
  bool sufficient = false;  // enough history for both fits
  bool drift = false;       // causality hypothesis rejected at alpha
  double p_value = 1.0;
  double f_stat = 0.0;
};

// Splits the history into an older and a newer segment of equal length,
// first-differences both, and fits the newer segment's differences on its own
// lags (restricted) and additionally on the older segment's lagged differences
// (unrestricted). Drift is declared when the F statistic falls in the lower
// alpha tail: a structural event in the newer segment inflates the
// unrestricted residual without a matching gain in fit, collapsing F.
GrangerResult granger_drift_test(const std::vector<double>& slope_history, int lag, double alpha);

}  // namespace driftlab
