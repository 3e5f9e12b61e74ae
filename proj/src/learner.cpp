#include "driftlab/learner.hpp"

namespace driftlab {

ProtocolLearner::ProtocolLearner(int n_features, int n_classes, ProtocolConfig cfg)
    : n_features_(n_features),
      n_classes_(n_classes),
      cfg_(cfg),
      primary_(std::make_unique<HoeffdingTree>(n_features, n_classes, cfg.tree)) {}

int ProtocolLearner::predict(const Eigen::VectorXd& x, Eigen::VectorXd* probs) const {
  ++predictions_;
  return primary_->predict(x, probs);
}

void ProtocolLearner::learn(const Eigen::VectorXd& x, int label) {
  primary_->learn(x, label);
  ++learned_;
  if (shadow_) {
    shadow_->learn(x, label);
    ++shadow_instances_;
    ++since_warning_;
  }
}

void ProtocolLearner::drift_protocol(SignalLevel level) {
  switch (level) {
    case SignalLevel::Warning:
      if (!shadow_) {
        shadow_ = std::make_unique<HoeffdingTree>(n_features_, n_classes_, cfg_.tree);
        shadow_instances_ = 0;
      }
      since_warning_ = 0;
      break;
    case SignalLevel::Drift:
      if (shadow_) {
        primary_ = std::move(shadow_);
        ++swaps_;
      } else {
        primary_ = std::make_unique<HoeffdingTree>(n_features_, n_classes_, cfg_.tree);
        ++fresh_installs_;
      }
      shadow_.reset();
      shadow_instances_ = 0;
      since_warning_ = 0;
      break;
    case SignalLevel::Stable:
      if (shadow_ && since_warning_ >= cfg_.stale_timeout) {
        shadow_.reset();
        shadow_instances_ = 0;
        since_warning_ = 0;
      }
      break;
  }
}

}  // namespace driftlab
