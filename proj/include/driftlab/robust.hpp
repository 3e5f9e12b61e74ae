/** robust — truncated-loss weighting and gated-energy defenses for the RBM. */
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "driftlab/instance.hpp"
#include "driftlab/rbm.hpp"

namespace driftlab {

enum class RhoKind { pseudo_huber, quadratic };
enum class ChiKind { bounded, quadratic };

struct RobustConfig {
  bool use_robust_gradient = false;
  bool use_robust_energy = false;
  double delta = 0.95;               // confidence for the truncation scale
  RhoKind rho_kind = RhoKind::pseudo_huber;
  ChiKind chi_kind = ChiKind::bounded;
  double sigma_floor = 1e-8;         // dispersion floor
  double gate_odds_log = 2.302585092994046;  // ln 10, gate decision margin
  double gate_exclude_frac = 0.5;    // instance dropped when this share of gates is off
  int gate_min_instances = 500;      // noise-model warm-up before gating
};

// running per-feature Gaussian noise channel plus reconstruction-residual scale
struct FeatureNoiseModel {
  Eigen::VectorXd b_tilde;      // running feature means
  Eigen::VectorXd sigma2_tilde; // running feature variances
  Eigen::VectorXd sigma2_rec;   // running reconstruction-residual variances
  std::int64_t count = 0;
  double decay = 0.99;
  double var_floor = 1e-6;

  bool fitted(int min_instances) const { return count >= min_instances; }
  void observe(const Eigen::VectorXd& v, const Eigen::VectorXd& recon);
};

// argmin_theta sum rho((L_a - theta)/s), solved on [min, max] via bisection
// on the monotone psi-sum (psi = rho')
double truncation_factor(const Eigen::VectorXd& losses, double s,
                         RhoKind rho = RhoKind::pseudo_huber);

// sigma > 0 solving sum chi((L_a - mean)/sigma) = 0; floor when degenerate
double dispersion_estimate(const Eigen::VectorXd& losses, ChiKind chi = ChiKind::bounded,
                           double floor_sigma = 1e-8);

// s = sigma_hat * sqrt(n / log(2/delta))
double scale_factor(double sigma_hat, int n, double delta);

// 0-1 classification loss per instance from the model's own class prediction;
// unlabelled entries get NaN (no evidence)
Eigen::VectorXd instance_losses(const MiniBatch& batch, const RbmParams& p);

// per-instance truncation weights, normalized to mean 1 over the batch;
// unlabelled instances get weight 1 before normalization
Eigen::VectorXd robust_instance_weights(const MiniBatch& batch, const RbmParams& p,
                                        const RobustConfig& cfg);

// E_R = 1/2 sum g_i (v_i - vt_i)^2 + E(v,h,z) + 1/2 sum (vt_i - bt_i)^2 / s2t_i
double robust_energy(const Eigen::VectorXd& v, const Eigen::VectorXd& v_tilde,
                     const Eigen::VectorXd& h, const Eigen::VectorXd& z,
                     const Eigen::VectorXd& g, const RbmParams& p,
                     const Eigen::VectorXd& b_tilde, const Eigen::VectorXd& sigma2_tilde);

// gate g_i = 0 when the noise channel N(v_i | b~_i, s2~_i) out-explains the
// reconstruction channel N(v_i | x~_i, s2_rec,i) by more than the odds margin
Eigen::VectorXd infer_gates(const Eigen::VectorXd& v, const RbmParams& p,
                            const FeatureNoiseModel& noise, const RobustConfig& cfg);

struct RobustUpdateResult {
  RbmParams params;
  Eigen::VectorXd weights;   // final per-instance weights (after exclusion)
  int excluded = 0;          // instances dropped by the gate-fraction rule
};

// CD-k with the configured defenses; with both flags off this is bit-identical
// to cd_k_update under the same seed
RobustUpdateResult robust_weight_update(const MiniBatch& batch, const RbmParams& p,
                                        const CdConfig& cd, const RobustConfig& cfg,
                                        const FeatureNoiseModel* noise, Rng& rng);

}  // namespace driftlab
