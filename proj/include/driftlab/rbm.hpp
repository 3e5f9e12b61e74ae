/** rbm — discriminative RBM with a class layer: energy, activations, CD-k. */
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "driftlab/instance.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

// Visible layer v (features), hidden layer h, class layer z (one-hot).
struct RbmParams {
  Eigen::VectorXd a;  // visible biases, size V
  Eigen::VectorXd b;  // hidden biases, size H
  Eigen::VectorXd c;  // class biases, size Z
  Eigen::MatrixXd W;  // V x H
  Eigen::MatrixXd U;  // H x Z

  int visible() const { return static_cast<int>(a.size()); }
  int hidden() const { return static_cast<int>(b.size()); }
  int classes() const { return static_cast<int>(c.size()); }
};

struct LayerState {
  Eigen::VectorXd v;
  Eigen::VectorXd h;
  Eigen::VectorXd z;
};

// zero biases, weights N(0, sigma_w^2)
RbmParams init_rbm(int visible, int hidden, int classes, Rng& rng, double sigma_w = 0.01);

double sigmoid(double x);
Eigen::VectorXd sigmoid(const Eigen::VectorXd& x);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// E(v,h,z) = -a'v - b'h - c'z - v'Wh - h'Uz
double energy(const RbmParams& p, const Eigen::VectorXd& v, const Eigen::VectorXd& h,
              const Eigen::VectorXd& z);

// P(h_j = 1 | v, z); pass an empty z for unlabelled input (class term dropped)
Eigen::VectorXd hidden_activation_probs(const RbmParams& p, const Eigen::VectorXd& v,
                                        const Eigen::VectorXd& z);

// P(v_i = 1 | h)
Eigen::VectorXd visible_activation_probs(const RbmParams& p, const Eigen::VectorXd& h);

// P(z = one_hot(k) | h), softmax over c_k + sum_j h_j U_jk
Eigen::VectorXd class_activation_probs(const RbmParams& p, const Eigen::VectorXd& h);

Eigen::VectorXd one_hot(int k, int classes);

// one full sweep: h ~ Bernoulli(P(h|v,z)), then v ~ Bernoulli(P(v|h)),
// z ~ categorical(P(z|h))
LayerState gibbs_step(const RbmParams& p, const LayerState& s, Rng& rng);

struct CdConfig {
  int k = 1;
  double eta = 0.05;
};

// Per-instance weights and feature gates let the robust paths reuse the same
// accumulation; weights == nullptr means all ones, gates == nullptr means all on.
RbmParams cd_k_update_weighted(const MiniBatch& batch, const RbmParams& p, const CdConfig& cfg,
                               Rng& rng, const Eigen::VectorXd* weights,
                               const Eigen::MatrixXd* gates);

// plain contrastive divergence: data phase mean-field, intermediate Gibbs
// steps sampled, reconstruction phase mean-field
RbmParams cd_k_update(const MiniBatch& batch, const RbmParams& p, const CdConfig& cfg, Rng& rng);

// reconstruction x~, y~ for one instance: h = P(h|v,z) (z dropped when
// unlabelled), x~ = P(v|h), y~ = P(z|h)
void reconstruct(const RbmParams& p, const Eigen::VectorXd& v, int label, Eigen::VectorXd* x_out,
                 Eigen::VectorXd* y_out);

// sqrt(sum_i (x_i - x~_i)^2 + sum_k (1{y=k} - y~_k)^2); the class term is
// dropped for unlabelled instances
double instance_error(const RbmParams& p, const Eigen::VectorXd& v, int label);

// mean instance error over the batch
double batch_error(const RbmParams& p, const MiniBatch& batch);

// class prediction from hidden activations computed without the class layer
int predict_class(const RbmParams& p, const Eigen::VectorXd& v);

void save_rbm(std::ostream& os, const RbmParams& p);
RbmParams load_rbm(std::istream& is);
void save_rbm_file(const std::string& path, const RbmParams& p);
RbmParams load_rbm_file(const std::string& path);

}  // namespace driftlab
