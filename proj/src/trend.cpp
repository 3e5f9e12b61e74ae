#include "driftlab/trend.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace driftlab {

namespace {

void rebuild_sums(TrendState& s) {
  s.tr_sum = 0.0;
  s.t_sum = 0.0;
  s.r_sum = 0.0;
  s.t2_sum = 0.0;
  for (const auto& [ti, ri] : s.window) {
    double td = static_cast<double>(ti);
    s.tr_sum += td * ri;
    s.t_sum += td;
    s.r_sum += ri;
    s.t2_sum += td * td;
  }
}

}  // namespace

void TrendState::reset() {
  window.clear();
  tr_sum = 0.0;
  t_sum = 0.0;
  r_sum = 0.0;
  t2_sum = 0.0;
  t = 0;
}

TrendUpdate update_trend(TrendState& s, double r_t) {
  if (r_t < 0.0) throw std::invalid_argument("update_trend: negative batch error");
  ++s.t;
  double td = static_cast<double>(s.t);
  s.window.emplace_back(s.t, r_t);
  s.tr_sum += td * r_t;
  s.t_sum += td;
  s.r_sum += r_t;
  s.t2_sum += td * td;

  while (static_cast<int>(s.window.size()) > s.w_max) {
    auto [to, ro] = s.window.front();
    s.window.pop_front();
    double tod = static_cast<double>(to);
    s.tr_sum -= tod * ro;
    s.t_sum -= tod;
    s.r_sum -= ro;
    s.t2_sum -= tod * tod;
  }

  TrendUpdate upd;
  if (!s.adaptive || static_cast<int>(s.window.size()) < s.min_adapt) return upd;

  // halves comparison with a variance-scaled cut; batch errors are not
  // normalized, so a bound scaled to a [0,1] range would be meaningless here
  const int n = static_cast<int>(s.window.size());
  const int m = n / 2;
  double older = 0.0, newer = 0.0, sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    double r = s.window[i].second;
    sum += r;
    sq += r * r;
    if (i < m) older += r;
    if (i >= n - m) newer += r;
  }
  older /= m;
  newer /= m;
  double mean = sum / static_cast<double>(n);
  double sd = std::sqrt(std::max(sq / static_cast<double>(n) - mean * mean, 0.0));
  double eps = std::max(sd, 1e-12) * std::sqrt(2.0 * std::log(4.0 / s.delta_w) / m);
  if (std::fabs(newer - older) <= eps) return upd;

  upd.step_up = newer > older;
  bool improving = false;
  if (!upd.step_up) {
    // CD training keeps lowering the batch error while the model is young; a
    // drop that merely continues the older half's own descent is improvement,
    // not a regime change, and only costs the stale half of the window
    if (m < 8) {
      // below that the older half's fitted movement cannot clear eps even on
      // a perfectly steady descent, so default to progress
      improving = true;
    } else {
      double ts = 0.0, rs = 0.0, trs = 0.0, t2 = 0.0;
      for (int i = 0; i < m; ++i) {
        double td = static_cast<double>(i + 1);
        double r = s.window[i].second;
        ts += td;
        rs += r;
        trs += td * r;
        t2 += td * td;
      }
      double denom = m * t2 - ts * ts;
      double slope = denom != 0.0 ? (m * trs - ts * rs) / denom : 0.0;
      improving = std::fabs(slope) * (m - 1) > eps;
    }
  }
  if (improving) {
    upd.shrunk = true;
    while (static_cast<int>(s.window.size()) > m) s.window.pop_front();
    rebuild_sums(s);
  } else {
    upd.drift_step = true;
  }
  return upd;
}

bool trend_slope(const TrendState& s, double* slope_out) {
  const double n = static_cast<double>(s.window.size());
  if (n < 2.0) return false;
  double denom = n * s.t2_sum - s.t_sum * s.t_sum;
  if (denom == 0.0) return false;
  double num = n * s.tr_sum - s.t_sum * s.r_sum;
  if (slope_out) *slope_out = num / denom;
  return true;
}

}  // namespace driftlab
