/** rbm_detector — reconstruction-error drift pipeline over mini-batches. */
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "driftlab/granger.hpp"
#include "driftlab/instance.hpp"
#include "driftlab/rbm.hpp"
#include "driftlab/robust.hpp"
#include "driftlab/trend.hpp"

namespace driftlab {

enum class SignalLevel { Stable, Warning, Drift };

struct DriftSignal {
  SignalLevel level = SignalLevel::Stable;
  std::int64_t at_batch = 0;
};

struct RbmDetectorConfig {
  int batch_size = 50;        // mini-batch M
  double hidden_ratio = 0.5;  // H = ceil(ratio * V), floor 2
  double eta = 0.01;
  int k = 1;
  double weight_sigma = 0.01;
  RobustConfig robust;

  int w_max = 30;  // trend window cap
  double delta_w = 0.002;
  int lag = 2;
  double alpha = 0.05;
  int seg_cap = 25;  // causality segment length cap
};

// per-batch trace record for the evaluation sink
struct BatchTrace {
  std::int64_t t = 0;
  double r = 0.0;
  double slope = 0.0;
  double p_value = 1.0;
  SignalLevel level = SignalLevel::Stable;
};

// Pipeline per batch: reconstruction error -> trend recurrences -> slope ->
// causality test -> signal policy -> (robust) CD training. A level shift of
// the error window that the halves rule cannot attribute to learning progress
// signals Drift; a rejected causality hypothesis on the slope history alone
// signals Warning.
class RbmDriftDetector {
 public:
  RbmDriftDetector(int n_features, int n_classes, const RbmDetectorConfig& cfg,
                   std::uint64_t seed);

  // per-instance entry; scales features by the running min/max and returns a
  // signal each time a full mini-batch was processed
  std::optional<DriftSignal> observe(const Eigen::VectorXd& x, int label);

  // direct entry with features already in [0,1]
  DriftSignal process_batch(const MiniBatch& batch);

  const RbmParams& params() const { return params_; }
  const TrendState& trend() const { return trend_; }
  const FeatureNoiseModel& noise() const { return noise_; }
  const std::vector<BatchTrace>& traces() const { return traces_; }
  void set_tracing(bool on) { tracing_ = on; }
  std::int64_t batches_seen() const { return batch_idx_; }

  Eigen::VectorXd scale(const Eigen::VectorXd& x) const;

 private:
  RbmDetectorConfig cfg_;
  RbmParams params_;
  Rng rng_;
  TrendState trend_;
  FeatureNoiseModel noise_;
  std::deque<double> slope_history_;
  std::vector<BatchTrace> traces_;
  MiniBatch pending_;
  Eigen::VectorXd feat_min_, feat_max_;
  bool bounds_started_ = false;
  std::int64_t batch_idx_ = 0;  // batches since construction
  bool tracing_ = false;
};

int hidden_units_for(int n_features, double ratio);

}  // namespace driftlab
