#include <doctest.h>

#include <cmath>
#include <vector>

#include "driftlab/rng.hpp"
#include "driftlab/trend.hpp"

using namespace driftlab;

namespace {

struct DirectSums {
  double tr = 0.0, t = 0.0, r = 0.0, t2 = 0.0;
};

DirectSums recompute(const TrendState& s) {
  DirectSums d;
  for (const auto& [ti, ri] : s.window) {
    double td = static_cast<double>(ti);
    d.tr += td * ri;
    d.t += td;
    d.r += ri;
    d.t2 += td * td;
  }
  return d;
}

void check_sums(const TrendState& s, double rel) {
  DirectSums d = recompute(s);
  CHECK(s.tr_sum == doctest::Approx(d.tr).epsilon(rel));
  CHECK(s.t_sum == doctest::Approx(d.t).epsilon(rel));
  CHECK(s.r_sum == doctest::Approx(d.r).epsilon(rel));
  CHECK(s.t2_sum == doctest::Approx(d.t2).epsilon(rel));
}

}  // namespace

TEST_CASE("first update seeds the sums") {
  TrendState s;
  update_trend(s, 0.3);
  CHECK(s.t == 1);
  CHECK(s.n_bar() == 1);
  CHECK(s.tr_sum == 0.3);
  CHECK(s.t_sum == 1.0);
  CHECK(s.r_sum == 0.3);
  CHECK(s.t2_sum == 1.0);
  double slope = 1.0;
  CHECK_FALSE(trend_slope(s, &slope));
}

TEST_CASE("sums over ten constant batches") {
  TrendState s;
  s.adaptive = false;
  for (int i = 0; i < 10; ++i) update_trend(s, 0.2);
  CHECK(s.t_sum == 55.0);
  CHECK(s.t2_sum == 385.0);
  CHECK(s.r_sum == doctest::Approx(2.0).epsilon(1e-14));
  check_sums(s, 1e-14);
  double slope = 1.0;
  CHECK(trend_slope(s, &slope));
  CHECK(slope == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
}

TEST_CASE("slope recovers linear trends exactly") {
  TrendState s;
  s.adaptive = false;
  for (int i = 1; i <= 10; ++i) update_trend(s, static_cast<double>(i));
  double slope = 0.0;
  CHECK(trend_slope(s, &slope));
  CHECK(slope == doctest::Approx(1.0).epsilon(1e-12));

  TrendState q;
  q.adaptive = false;
  for (int i = 1; i <= 25; ++i) update_trend(q, 3.0 * i + 7.0);
  CHECK(trend_slope(q, &slope));
  CHECK(slope == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("eviction keeps the window at its cap") {
  TrendState s;
  s.adaptive = false;
  s.w_max = 3;
  std::vector<double> rs = {0.5, 0.1, 0.9, 0.4};
  for (double r : rs) update_trend(s, r);
  CHECK(s.n_bar() == 3);
  CHECK(s.window.front().first == 2);
  CHECK(s.window.back().first == 4);
  check_sums(s, 1e-14);
}

TEST_CASE("recurrences track a from-scratch recompute on random sequences") {
  Rng rng(733);
  for (int seq = 0; seq < 100; ++seq) {
    TrendState s;
    s.adaptive = false;
    s.w_max = 2 + static_cast<int>(rng.below(99));
    for (int step = 1; step <= 200; ++step) {
      update_trend(s, rng.uniform());
      if (step % 17 != 0 && step != 200) continue;
      check_sums(s, 1e-9);
      double slope = 0.0;
      if (trend_slope(s, &slope)) {
        DirectSums d = recompute(s);
        double n = static_cast<double>(s.n_bar());
        double direct = (n * d.tr - d.t * d.r) / (n * d.t2 - d.t * d.t);
        CHECK(slope == doctest::Approx(direct).epsilon(1e-9).scale(1.0));
      }
    }
  }
}

TEST_CASE("an upward level shift is reported as a drift step") {
  TrendState s;
  for (int i = 0; i < 10; ++i) {
    TrendUpdate u = update_trend(s, 0.1);
    CHECK_FALSE(u.shrunk);
    CHECK_FALSE(u.drift_step);
  }
  bool fired = false;
  for (int i = 0; i < 20 && !fired; ++i) {
    int before = s.n_bar();
    TrendUpdate u = update_trend(s, 0.9);
    CHECK_FALSE(u.shrunk);
    if (u.drift_step) {
      fired = true;
      CHECK(u.step_up);
      // the caller decides what to do with the window; nothing is cut here
      CHECK(s.n_bar() == before + 1);
      check_sums(s, 1e-12);
    }
  }
  CHECK(fired);
}

TEST_CASE("a downward step off a flat plateau is a drift step too") {
  TrendState s;
  for (int i = 0; i < 10; ++i) update_trend(s, 0.9);
  bool fired = false;
  for (int i = 0; i < 20 && !fired; ++i) {
    TrendUpdate u = update_trend(s, 0.1);
    CHECK_FALSE(u.shrunk);
    if (u.drift_step) {
      fired = true;
      CHECK_FALSE(u.step_up);
    }
  }
  CHECK(fired);
}

TEST_CASE("a steady descent shrinks the window instead of flagging drift") {
  TrendState s;
  bool shrunk_once = false;
  for (int i = 0; i < 100; ++i) {
    TrendUpdate u = update_trend(s, 1.0 - 0.005 * i);
    CHECK_FALSE(u.drift_step);
    if (u.shrunk) {
      shrunk_once = true;
      check_sums(s, 1e-12);
    }
  }
  CHECK(shrunk_once);
}

TEST_CASE("adaptive mode off never shrinks") {
  TrendState s;
  s.adaptive = false;
  s.w_max = 50;
  for (int i = 0; i < 10; ++i) {
    TrendUpdate u = update_trend(s, 0.1);
    CHECK_FALSE(u.shrunk);
    CHECK_FALSE(u.drift_step);
  }
  for (int i = 0; i < 30; ++i) {
    TrendUpdate u = update_trend(s, 5.0);
    CHECK_FALSE(u.shrunk);
    CHECK_FALSE(u.drift_step);
  }
  CHECK(s.n_bar() == 40);
}

TEST_CASE("negative batch errors are rejected") {
  TrendState s;
  CHECK_THROWS(update_trend(s, -0.001));
}

TEST_CASE("reset forgets everything") {
  TrendState s;
  for (int i = 0; i < 15; ++i) update_trend(s, 0.4);
  s.reset();
  CHECK(s.t == 0);
  CHECK(s.n_bar() == 0);
  CHECK(s.tr_sum == 0.0);
  CHECK(s.t_sum == 0.0);
  CHECK(s.r_sum == 0.0);
  CHECK(s.t2_sum == 0.0);
  update_trend(s, 0.7);
  CHECK(s.window.front().first == 1);
}
