#include "driftlab/granger.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "driftlab/stats.hpp"

namespace driftlab {

GrangerResult granger_drift_test(const std::vector<double>& slope_history, int lag, double alpha) {
  GrangerResult res;
  if (lag < 1) return res;
  const int seg = static_cast<int>(slope_history.size()) / 2;
  // after differencing each segment has seg-1 samples; the unrestricted fit
  // spends 2*lag+1 parameters and needs a few residual degrees of freedom
  const int diff_len = seg - 1;
  const int m = diff_len - lag;
  const int df2 = m - (2 * lag + 1);
  if (seg < 2 || m < 1 || df2 < 3) return res;

  std::vector<double> dx(diff_len), dy(diff_len);
  for (int i = 0; i < diff_len; ++i) {
    dx[i] = slope_history[i + 1] - slope_history[i];
    dy[i] = slope_history[seg + i + 1] - slope_history[seg + i];
  }

  Eigen::VectorXd y(m);
  Eigen::MatrixXd xr(m, lag + 1);
  Eigen::MatrixXd xu(m, 2 * lag + 1);
  for (int i = 0; i < m; ++i) {
    int t = i + lag;
    y[i] = dy[t];
    xr(i, 0) = 1.0;
    xu(i, 0) = 1.0;
    for (int j = 1; j <= lag; ++j) {
      xr(i, j) = dy[t - j];
      xu(i, j) = dy[t - j];
      xu(i, lag + j) = dx[t - j];
    }
  }

  double rss_r = ols_rss(xr, y);
  double rss_u = ols_rss(xu, y);
  res.sufficient = true;
  if (rss_u <= 1e-300) {
    // perfect unrestricted fit: causality maximally supported
    res.p_value = 1.0;
    res.f_stat = std::numeric_limits<double>::infinity();
    return res;
  }
  double f = ((rss_r - rss_u) / lag) / (rss_u / df2);
  if (f < 0.0) f = 0.0;  // nested models, negative only through rounding
  res.f_stat = f;
  res.p_value = f_cdf(f, static_cast<double>(lag), static_cast<double>(df2));
  res.drift = res.p_value <= alpha;
  return res;
}

}  // namespace driftlab
