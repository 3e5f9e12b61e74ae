#include "driftlab/robust.hpp"

#include <limits>
#include <stdexcept>

namespace driftlab {

namespace {

double psi(double x, RhoKind kind) {
  switch (kind) {
    case RhoKind::pseudo_huber:
      return x / std::sqrt(1.0 + x * x);
    case RhoKind::quadratic:
      return 2.0 * x;
  }
  return 0.0;
}

double chi_fn(double x, ChiKind kind) {
  switch (kind) {
    case ChiKind::bounded:
      return x * x / (1.0 + x * x) - 0.5;
    case ChiKind::quadratic:
      return x * x - 1.0;
  }
  return 0.0;
}

double log_normal_density(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * (d * d / var) - 0.5 * std::log(6.283185307179586 * var);
}

}  // namespace

void FeatureNoiseModel::observe(const Eigen::VectorXd& v, const Eigen::VectorXd& recon) {
  if (count == 0) {
    b_tilde = v;
    sigma2_tilde = Eigen::VectorXd::Constant(v.size(), var_floor);
    sigma2_rec = Eigen::VectorXd::Constant(v.size(), var_floor);
    count = 1;
    return;
  }
  double incr = 1.0 - decay;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double d = v[i] - b_tilde[i];
    b_tilde[i] += incr * d;
    sigma2_tilde[i] = std::max(var_floor, decay * (sigma2_tilde[i] + incr * d * d));
    double r = v[i] - recon[i];
    sigma2_rec[i] = std::max(var_floor, decay * sigma2_rec[i] + incr * r * r);
  }
  ++count;
}

double truncation_factor(const Eigen::VectorXd& losses, double s, RhoKind rho) {
  if (losses.size() < 1) throw std::invalid_argument("truncation_factor: empty losses");
  if (!(s > 0.0)) throw std::invalid_argument("truncation_factor: non-positive scale");
  double lo = losses.minCoeff(), hi = losses.maxCoeff();
  if (lo == hi) return lo;
  // sum psi((L-theta)/s) is strictly decreasing in theta and changes sign on
  // [lo, hi]; bisection reaches machine precision on the quadratic case
  auto score = [&](double theta) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < losses.size(); ++i) acc += psi((losses[i] - theta) / s, rho);
    return acc;
  };
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (score(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double dispersion_estimate(const Eigen::VectorXd& losses, ChiKind chi, double floor_sigma) {
  if (losses.size() < 2) throw std::invalid_argument("dispersion_estimate: need n >= 2");
  double gamma = losses.mean();
  double max_dev = (losses.array() - gamma).abs().maxCoeff();
  if (max_dev == 0.0) return floor_sigma;
  auto score = [&](double sigma) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < losses.size(); ++i) acc += chi_fn((losses[i] - gamma) / sigma, chi);
    return acc;
  };
  double lo = floor_sigma, hi = 10.0 * max_dev;
  if (score(lo) <= 0.0) return floor_sigma;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (score(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double scale_factor(double sigma_hat, int n, double delta) {
  if (!(sigma_hat > 0.0)) throw std::invalid_argument("scale_factor: non-positive sigma");
  if (n < 1) throw std::invalid_argument("scale_factor: n must be >= 1");
  if (!(delta > 0.0) || !(delta < 1.0)) throw std::invalid_argument("scale_factor: delta outside (0,1)");
  return sigma_hat * std::sqrt(static_cast<double>(n) / std::log(2.0 / delta));
}

Eigen::VectorXd instance_losses(const MiniBatch& batch, const RbmParams& p) {
  Eigen::VectorXd losses(batch.size());
  for (int n = 0; n < batch.size(); ++n) {
    const BatchItem& it = batch.items[n];
    if (it.label == kNoLabel) {
      losses[n] = std::numeric_limits<double>::quiet_NaN();
    } else {
      losses[n] = predict_class(p, it.v) == it.label ? 0.0 : 1.0;
    }
  }
  return losses;
}

Eigen::VectorXd robust_instance_weights(const MiniBatch& batch, const RbmParams& p,
                                        const RobustConfig& cfg) {
  const int n = batch.size();
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd losses = instance_losses(batch, p);
  std::vector<double> labelled;
  labelled.reserve(n);
  for (int i = 0; i < n; ++i) {
    if (!std::isnan(losses[i])) labelled.push_back(losses[i]);
  }
  if (labelled.size() < 2) return w;
  Eigen::Map<Eigen::VectorXd> lab(labelled.data(), static_cast<Eigen::Index>(labelled.size()));
  double lo = lab.minCoeff(), hi = lab.maxCoeff();
  if (lo == hi) return w;  // no dispersion, nothing to truncate

  double sigma = dispersion_estimate(lab, cfg.chi_kind, cfg.sigma_floor);
  double s = scale_factor(sigma, static_cast<int>(lab.size()), cfg.delta);
  double theta = truncation_factor(lab, s, cfg.rho_kind);
  for (int i = 0; i < n; ++i) {
    if (std::isnan(losses[i])) continue;
    double r = (losses[i] - theta) / sigma;
    w[i] = 1.0 / (1.0 + r * r);
  }
  double mean_w = w.mean();
  if (mean_w > 0.0) w /= mean_w;
  return w;
}

double robust_energy(const Eigen::VectorXd& v, const Eigen::VectorXd& v_tilde,
                     const Eigen::VectorXd& h, const Eigen::VectorXd& z,
                     const Eigen::VectorXd& g, const RbmParams& p,
                     const Eigen::VectorXd& b_tilde, const Eigen::VectorXd& sigma2_tilde) {
  if (v_tilde.size() != v.size() || g.size() != v.size() || b_tilde.size() != v.size() ||
      sigma2_tilde.size() != v.size()) {
    throw std::invalid_argument("robust_energy: dimension mismatch");
  }
  if ((sigma2_tilde.array() <= 0.0).any()) {
    throw std::invalid_argument("robust_energy: non-positive variance");
  }
  double gated = 0.5 * (g.array() * (v - v_tilde).array().square()).sum();
  double prior = 0.5 * ((v_tilde - b_tilde).array().square() / sigma2_tilde.array()).sum();
  return gated + energy(p, v, h, z) + prior;
}

Eigen::VectorXd infer_gates(const Eigen::VectorXd& v, const RbmParams& p,
                            const FeatureNoiseModel& noise, const RobustConfig& cfg) {
  const int V = static_cast<int>(v.size());
  if (!noise.fitted(cfg.gate_min_instances)) return Eigen::VectorXd::Ones(V);
  Eigen::VectorXd recon;
  reconstruct(p, v, kNoLabel, &recon, nullptr);
  Eigen::VectorXd g(V);
  for (int i = 0; i < V; ++i) {
    double ll_noise = log_normal_density(v[i], noise.b_tilde[i], noise.sigma2_tilde[i]);
    double ll_recon = log_normal_density(v[i], recon[i], noise.sigma2_rec[i]);
    g[i] = (ll_noise - ll_recon > cfg.gate_odds_log) ? 0.0 : 1.0;
  }
  return g;
}

RobustUpdateResult robust_weight_update(const MiniBatch& batch, const RbmParams& p,
                                        const CdConfig& cd, const RobustConfig& cfg,
                                        const FeatureNoiseModel* noise, Rng& rng) {
  RobustUpdateResult out;
  if (!cfg.use_robust_gradient && !cfg.use_robust_energy) {
    out.params = cd_k_update_weighted(batch, p, cd, rng, nullptr, nullptr);
    out.weights = Eigen::VectorXd::Ones(batch.size());
    return out;
  }

  Eigen::VectorXd w = cfg.use_robust_gradient ? robust_instance_weights(batch, p, cfg)
                                              : Eigen::VectorXd::Ones(batch.size());
  Eigen::MatrixXd gates;
  const Eigen::MatrixXd* gates_ptr = nullptr;
  if (cfg.use_robust_energy && noise != nullptr) {
    gates.resize(batch.size(), p.visible());
    for (int n = 0; n < batch.size(); ++n) {
      Eigen::VectorXd g = infer_gates(batch.items[n].v, p, *noise, cfg);
      double off_frac = 1.0 - g.mean();
      if (off_frac >= cfg.gate_exclude_frac && g.size() > 0) {
        w[n] = 0.0;  // instance judged adversarial, drop it everywhere
        ++out.excluded;
      }
      gates.row(n) = g.transpose();
    }
    gates_ptr = &gates;
  }
  out.params = cd_k_update_weighted(batch, p, cd, rng, &w, gates_ptr);
  out.weights = std::move(w);
  return out;
}

}  // namespace driftlab
