#include "driftlab/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace driftlab {

void Eddm::reset() {
  idx_ = 0;
  last_error_idx_ = -1;
  num_errors_ = 0;
  dist_.reset();
  best_m2s_ = 0.0;
}

SignalLevel Eddm::step_error(bool error) {
  ++idx_;
  if (!error) return SignalLevel::Stable;
  if (last_error_idx_ >= 0) {
    dist_.add(static_cast<double>(idx_ - last_error_idx_));
  }
  last_error_idx_ = idx_;
  ++num_errors_;
  if (dist_.n < 1) return SignalLevel::Stable;
  double m2s = dist_.mean + 2.0 * dist_.stddev();
  if (m2s > best_m2s_) best_m2s_ = m2s;
  if (num_errors_ < p_.min_errors || best_m2s_ <= 0.0) return SignalLevel::Stable;
  double ratio = m2s / best_m2s_;
  if (ratio < p_.alpha_d) {
    reset();
    return SignalLevel::Drift;
  }
  if (ratio < p_.alpha_w) return SignalLevel::Warning;
  return SignalLevel::Stable;
}

void Ecdd::reset() {
  t_ = 0;
  errors_ = 0;
  p_hat_ = 0.0;
  z_ = 0.0;
}

SignalLevel Ecdd::step_error(bool error) {
  ++t_;
  double e = error ? 1.0 : 0.0;
  p_hat_ += (e - p_hat_) / static_cast<double>(t_);
  if (error) ++errors_;
  z_ = (1.0 - p_.lambda) * z_ + p_.lambda * e;
  if (errors_ < p_.min_errors) return SignalLevel::Stable;
  double lam = p_.lambda;
  double decay = std::pow(1.0 - lam, 2.0 * static_cast<double>(t_));
  double var = lam / (2.0 - lam) * (1.0 - decay) * p_hat_ * (1.0 - p_hat_);
  double sigma = var > 0.0 ? std::sqrt(var) : 0.0;
  if (z_ > p_hat_ + p_.l_drift * sigma) {
    reset();
    return SignalLevel::Drift;
  }
  if (z_ > p_hat_ + p_.l_warn * sigma) return SignalLevel::Warning;
  return SignalLevel::Stable;
}

Fhddm::Fhddm(Params p) : p_(p) {
  if (p_.window < 1) throw std::invalid_argument("fhddm: window must be >= 1");
  if (!(p_.delta > 0.0) || !(p_.delta < 1.0)) throw std::invalid_argument("fhddm: delta outside (0,1)");
  bound_ = std::sqrt(std::log(1.0 / p_.delta) / (2.0 * static_cast<double>(p_.window)));
  reset();
}

void Fhddm::reset() {
  win_.clear();
  correct_in_win_ = 0;
  p_max_ = 0.0;
}

SignalLevel Fhddm::step(bool correct) {
  win_.push_back(correct);
  if (correct) ++correct_in_win_;
  if (static_cast<int>(win_.size()) > p_.window) {
    if (win_.front()) --correct_in_win_;
    win_.pop_front();
  }
  if (static_cast<int>(win_.size()) < p_.window) return SignalLevel::Stable;
  double p = static_cast<double>(correct_in_win_) / static_cast<double>(p_.window);
  if (p > p_max_) p_max_ = p;
  if (p_max_ - p > bound_) {
    reset();
    return SignalLevel::Drift;
  }
  return SignalLevel::Stable;
}

void Rddm::reset() {
  buf_.clear();
  n_ = 0;
  err_ = 0;
  p_min_ = 0.0;
  s_min_ = 0.0;
  mins_set_ = false;
  warn_streak_ = 0;
  forced_ = false;
}

SignalLevel Rddm::step_error(bool error) {
  forced_ = false;
  buf_.push_back(error);
  ++n_;
  if (error) ++err_;
  if (p_.prune && static_cast<int>(buf_.size()) > p_.max_instances) {
    // recompute the running stats, minima included, over the most recent
    // min_instances; keeping the old minima would pit a small-window
    // deviation against a large-window floor and guarantee a false alarm
    while (static_cast<int>(buf_.size()) > p_.min_instances) {
      if (buf_.front()) --err_;
      buf_.pop_front();
      --n_;
    }
    mins_set_ = false;
  }
  if (err_ < p_.min_errors) return SignalLevel::Stable;
  double p = static_cast<double>(err_) / static_cast<double>(n_);
  double s = std::sqrt(p * (1.0 - p) / static_cast<double>(n_));
  if (!mins_set_ || p + s < p_min_ + s_min_) {
    p_min_ = p;
    s_min_ = s;
    mins_set_ = true;
  }
  double m_w = 20.0 * (1.0 - p_.alpha_w);
  double m_d = 20.0 * (1.0 - p_.alpha_d);
  if (p + s >= p_min_ + m_d * s_min_) {
    reset();
    return SignalLevel::Drift;
  }
  if (p + s >= p_min_ + m_w * s_min_) {
    ++warn_streak_;
    if (warn_streak_ >= p_.warn_limit) {
      reset();
      forced_ = true;
      return SignalLevel::Drift;
    }
    return SignalLevel::Warning;
  }
  warn_streak_ = 0;
  return SignalLevel::Stable;
}

void Wstd::reset() {
  recent_.clear();
  old_.clear();
  ones_recent_ = 0;
  ones_old_ = 0;
}

double Wstd::rank_sum_p(int ones_old, int zeros_old, int ones_recent, int zeros_recent) {
  double n1 = ones_old + zeros_old;
  double n2 = ones_recent + zeros_recent;
  double total = n1 + n2;
  double c0 = zeros_old + zeros_recent;
  double c1 = ones_old + ones_recent;
  // binary samples: every 0 shares one average rank, every 1 the other
  double rank0 = (c0 + 1.0) / 2.0;
  double rank1 = c0 + (c1 + 1.0) / 2.0;
  double r1 = zeros_old * rank0 + ones_old * rank1;
  double mean_r1 = n1 * (total + 1.0) / 2.0;
  double tie_term = 0.0;
  for (double t : {c0, c1}) tie_term += t * t * t - t;
  double var = n1 * n2 / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
  if (var <= 0.0) return 1.0;  // all ties, test degenerate by convention
  double z = (r1 - mean_r1) / std::sqrt(var);
  return 2.0 * (1.0 - normal_cdf(std::fabs(z)));
}

SignalLevel Wstd::step(bool correct) {
  recent_.push_back(correct);
  if (correct) ++ones_recent_;
  if (static_cast<int>(recent_.size()) > p_.window) {
    bool moved = recent_.front();
    recent_.pop_front();
    if (moved) --ones_recent_;
    old_.push_back(moved);
    if (moved) ++ones_old_;
    if (static_cast<int>(old_.size()) > p_.max_old) {
      if (old_.front()) --ones_old_;
      old_.pop_front();
    }
  }
  if (static_cast<int>(old_.size()) < p_.window) return SignalLevel::Stable;
  int zeros_old = static_cast<int>(old_.size()) - ones_old_;
  int zeros_recent = static_cast<int>(recent_.size()) - ones_recent_;
  double p = rank_sum_p(ones_old_, zeros_old, ones_recent_, zeros_recent);
  if (p < p_.alpha_d) {
    reset();
    return SignalLevel::Drift;
  }
  if (p < p_.alpha_w) return SignalLevel::Warning;
  return SignalLevel::Stable;
}

std::unique_ptr<BooleanDetector> make_baseline(const std::string& name) {
  if (name == "eddm") return std::make_unique<Eddm>();
  if (name == "ecdd") return std::make_unique<Ecdd>();
  if (name == "fhddm") return std::make_unique<Fhddm>();
  if (name == "rddm") return std::make_unique<Rddm>();
  if (name == "wstd") return std::make_unique<Wstd>();
  throw std::invalid_argument("make_baseline: unknown detector '" + name + "'");
}

}  // namespace driftlab
