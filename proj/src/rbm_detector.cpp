#include "driftlab/rbm_detector.hpp"

#include <cmath>
#include <stdexcept>

namespace driftlab {

int hidden_units_for(int n_features, double ratio) {
  int h = static_cast<int>(std::ceil(ratio * n_features));
  return h < 2 ? 2 : h;
}

RbmDriftDetector::RbmDriftDetector(int n_features, int n_classes, const RbmDetectorConfig& cfg,
                                   std::uint64_t seed)
    : cfg_(cfg), rng_(seed) {
  if (n_features < 1 || n_classes < 2) {
    throw std::invalid_argument("RbmDriftDetector: need at least one feature and two classes");
  }
  if (cfg.batch_size < 2) throw std::invalid_argument("RbmDriftDetector: batch_size must be >= 2");
  params_ = init_rbm(n_features, hidden_units_for(n_features, cfg.hidden_ratio), n_classes, rng_,
                     cfg.weight_sigma);
  trend_.w_max = cfg.w_max;
  trend_.delta_w = cfg.delta_w;
  trend_.adaptive = true;
  feat_min_ = Eigen::VectorXd::Zero(n_features);
  feat_max_ = Eigen::VectorXd::Zero(n_features);
}

Eigen::VectorXd RbmDriftDetector::scale(const Eigen::VectorXd& x) const {
  Eigen::VectorXd v(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double span = feat_max_[i] - feat_min_[i];
    v[i] = span > 0.0 ? (x[i] - feat_min_[i]) / span : 0.5;
  }
  return v;
}

std::optional<DriftSignal> RbmDriftDetector::observe(const Eigen::VectorXd& x, int label) {
  if (x.size() != params_.visible()) {
    throw std::invalid_argument("RbmDriftDetector: feature dimension mismatch");
  }
  if (!bounds_started_) {
    feat_min_ = x;
    feat_max_ = x;
    bounds_started_ = true;
  } else {
    feat_min_ = feat_min_.cwiseMin(x);
    feat_max_ = feat_max_.cwiseMax(x);
  }
  pending_.items.push_back(BatchItem{scale(x), label});
  if (pending_.size() < cfg_.batch_size) return std::nullopt;
  MiniBatch batch = std::move(pending_);
  pending_ = MiniBatch{};
  return process_batch(batch);
}

DriftSignal RbmDriftDetector::process_batch(const MiniBatch& batch) {
  if (batch.items.empty()) throw std::invalid_argument("process_batch: empty batch");
  ++batch_idx_;

  // reconstruction error with the pre-update parameters; the label-free
  // reconstruction doubles as the noise model's clean channel
  const bool track_noise = cfg_.robust.use_robust_energy;
  double r_sum = 0.0;
  std::vector<Eigen::VectorXd> bare_recons;
  if (track_noise) bare_recons.reserve(batch.items.size());
  for (const BatchItem& it : batch.items) {
    r_sum += instance_error(params_, it.v, it.label);
    if (track_noise) {
      Eigen::VectorXd recon;
      reconstruct(params_, it.v, kNoLabel, &recon, nullptr);
      bare_recons.push_back(std::move(recon));
    }
  }
  double r_t = r_sum / static_cast<double>(batch.size());

  TrendUpdate upd = update_trend(trend_, r_t);

  double slope = 0.0;
  bool have_slope = trend_slope(trend_, &slope);
  if (have_slope) {
    slope_history_.push_back(slope);
    while (static_cast<int>(slope_history_.size()) > 2 * cfg_.seg_cap) slope_history_.pop_front();
  }

  GrangerResult gr;
  int seg = std::min<int>(cfg_.seg_cap, static_cast<int>(slope_history_.size()) / 2);
  if (seg >= 2) {
    std::vector<double> recent(slope_history_.end() - 2 * seg, slope_history_.end());
    gr = granger_drift_test(recent, cfg_.lag, cfg_.alpha);
  }

  DriftSignal sig;
  sig.at_batch = batch_idx_;
  if (upd.drift_step) {
    sig.level = SignalLevel::Drift;
  } else if (gr.sufficient && gr.p_value <= 2.0 * cfg_.alpha) {
    sig.level = SignalLevel::Warning;
  }

  RobustUpdateResult res = robust_weight_update(batch, params_, CdConfig{cfg_.k, cfg_.eta},
                                                cfg_.robust, track_noise ? &noise_ : nullptr, rng_);
  params_ = std::move(res.params);

  if (track_noise) {
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
      noise_.observe(batch.items[i].v, bare_recons[i]);
    }
  }

  if (tracing_) {
    traces_.push_back(BatchTrace{batch_idx_, r_t, have_slope ? slope : 0.0,
                                 gr.sufficient ? gr.p_value : 1.0, sig.level});
  }

  if (sig.level == SignalLevel::Drift) {
    trend_.reset();
    slope_history_.clear();
  }
  return sig;
}

}  // namespace driftlab
