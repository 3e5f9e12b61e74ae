#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>

#include "driftlab/hoeffding_tree.hpp"
#include "driftlab/rbm_detector.hpp"

namespace driftlab {

struct ProtocolConfig {
  TreeConfig tree;
  std::int64_t stale_timeout = 5000;
};

// Hoeffding tree with the two-level rebuild protocol: Warning starts a shadow
// tree trained on everything from that point on, Drift swaps the shadow in
// (or installs a fresh tree when no warning preceded), and a long Stable
// stretch discards a stale shadow.
class ProtocolLearner {
 public:
  ProtocolLearner(int n_features, int n_classes, ProtocolConfig cfg = {});

  int predict(const Eigen::VectorXd& x, Eigen::VectorXd* probs = nullptr) const;
  void learn(const Eigen::VectorXd& x, int label);
  void drift_protocol(SignalLevel level);

  bool has_shadow() const { return shadow_ != nullptr; }
  std::int64_t shadow_instances() const { return shadow_instances_; }
  std::int64_t predictions() const { return predictions_; }
  std::int64_t learned() const { return learned_; }
  std::int64_t swaps() const { return swaps_; }
  std::int64_t fresh_installs() const { return fresh_installs_; }
  const HoeffdingTree& primary() const { return *primary_; }

 private:
  int n_features_;
  int n_classes_;
  ProtocolConfig cfg_;
  std::unique_ptr<HoeffdingTree> primary_;
  std::unique_ptr<HoeffdingTree> shadow_;
  std::int64_t shadow_instances_ = 0;
  std::int64_t since_warning_ = 0;
  mutable std::int64_t predictions_ = 0;
  std::int64_t learned_ = 0;
  std::int64_t swaps_ = 0;
  std::int64_t fresh_installs_ = 0;
};

}  // namespace driftlab
