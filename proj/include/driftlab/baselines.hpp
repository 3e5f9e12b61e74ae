/** baselines — five reference drift detectors over the correctness stream. */
#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>

#include "driftlab/rbm_detector.hpp"
#include "driftlab/stats.hpp"

namespace driftlab {

// Uniform harness-facing interface; step() takes the base learner's
// per-instance correctness and adapts to each algorithm's native convention.
class BooleanDetector {
 public:
  virtual ~BooleanDetector() = default;
  virtual SignalLevel step(bool correct) = 0;
  virtual void reset() = 0;
};

// distance-between-errors ratio test
class Eddm : public BooleanDetector {
 public:
  struct Params {
    double alpha_w = 0.95;
    double alpha_d = 0.90;
    int min_errors = 30;
  };
  Eddm() : Eddm(Params()) {}
  explicit Eddm(Params p) : p_(p) { reset(); }
  SignalLevel step(bool correct) override { return step_error(!correct); }
  SignalLevel step_error(bool error);
  void reset() override;

 private:
  Params p_;
  std::int64_t idx_ = 0;
  std::int64_t last_error_idx_ = -1;
  std::int64_t num_errors_ = 0;
  Welford dist_;
  double best_m2s_ = 0.0;  // max of mean + 2*std over error events
};

// EWMA of the error indicator against control limits
class Ecdd : public BooleanDetector {
 public:
  struct Params {
    double lambda = 0.2;
    int min_errors = 30;
    double l_warn = 1.7;
    double l_drift = 2.7;
  };
  Ecdd() : Ecdd(Params()) {}
  explicit Ecdd(Params p) : p_(p) { reset(); }
  SignalLevel step(bool correct) override { return step_error(!correct); }
  SignalLevel step_error(bool error);
  void reset() override;

 private:
  Params p_;
  std::int64_t t_ = 0;
  std::int64_t errors_ = 0;
  double p_hat_ = 0.0;
  double z_ = 0.0;
};

// sliding-window correct rate against its historical maximum
class Fhddm : public BooleanDetector {
 public:
  struct Params {
    int window = 100;
    double delta = 1e-5;
  };
  Fhddm() : Fhddm(Params()) {}
  explicit Fhddm(Params p);
  SignalLevel step(bool correct) override;
  void reset() override;
  double bound() const { return bound_; }

 private:
  Params p_;
  double bound_;
  std::deque<bool> win_;
  int correct_in_win_ = 0;
  double p_max_ = 0.0;
};

// DDM-style error tracking with instance pruning and a warning time limit
class Rddm : public BooleanDetector {
 public:
  struct Params {
    double alpha_w = 0.90;  // mapped to multiplier 20*(1-alpha)
    double alpha_d = 0.80;
    int min_errors = 30;
    int min_instances = 3000;
    int max_instances = 10000;
    int warn_limit = 800;
    bool prune = true;
  };
  Rddm() : Rddm(Params()) {}
  explicit Rddm(Params p) : p_(p) { reset(); }
  SignalLevel step(bool correct) override { return step_error(!correct); }
  SignalLevel step_error(bool error);
  void reset() override;
  bool last_drift_forced() const { return forced_; }

 private:
  Params p_;
  std::deque<bool> buf_;
  std::int64_t n_ = 0;
  std::int64_t err_ = 0;
  double p_min_ = 0.0, s_min_ = 0.0;
  bool mins_set_ = false;
  std::int64_t warn_streak_ = 0;
  bool forced_ = false;
};

// rank-sum comparison between an old and a recent correctness window
class Wstd : public BooleanDetector {
 public:
  struct Params {
    int window = 100;
    double alpha_w = 0.05;
    double alpha_d = 0.005;
    int max_old = 1000;
  };
  Wstd() : Wstd(Params()) {}
  explicit Wstd(Params p) : p_(p) { reset(); }
  SignalLevel step(bool correct) override;
  void reset() override;
  // two-sided tie-corrected normal-approximation p-value; exposed for tests
  static double rank_sum_p(int ones_old, int zeros_old, int ones_recent, int zeros_recent);

 private:
  Params p_;
  std::deque<bool> recent_, old_;
  int ones_recent_ = 0, ones_old_ = 0;
};

// factory over the canonical names: eddm, ecdd, fhddm, rddm, wstd
std::unique_ptr<BooleanDetector> make_baseline(const std::string& name);

}  // namespace driftlab
