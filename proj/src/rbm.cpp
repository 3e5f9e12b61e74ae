#include "driftlab/rbm.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace driftlab {

namespace {

void check_dims(const RbmParams& p) {
  if (p.W.rows() != p.a.size() || p.W.cols() != p.b.size() || p.U.rows() != p.b.size() ||
      p.U.cols() != p.c.size()) {
    throw std::invalid_argument("rbm: parameter dimension mismatch");
  }
}

Eigen::VectorXd sample_bernoulli(const Eigen::VectorXd& probs, Rng& rng) {
  Eigen::VectorXd s(probs.size());
  for (Eigen::Index i = 0; i < probs.size(); ++i) s[i] = rng.bernoulli(probs[i]) ? 1.0 : 0.0;
  return s;
}

Eigen::VectorXd sample_categorical_onehot(const Eigen::VectorXd& probs, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  int k = static_cast<int>(probs.size()) - 1;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) {
      k = static_cast<int>(i);
      break;
    }
  }
  return one_hot(k, static_cast<int>(probs.size()));
}

}  // namespace

RbmParams init_rbm(int visible, int hidden, int classes, Rng& rng, double sigma_w) {
  if (visible < 1 || hidden < 1 || classes < 2) {
    throw std::invalid_argument("init_rbm: need visible >= 1, hidden >= 1, classes >= 2");
  }
  RbmParams p;
  p.a = Eigen::VectorXd::Zero(visible);
  p.b = Eigen::VectorXd::Zero(hidden);
  p.c = Eigen::VectorXd::Zero(classes);
  p.W.resize(visible, hidden);
  p.U.resize(hidden, classes);
  for (int i = 0; i < visible; ++i)
    for (int j = 0; j < hidden; ++j) p.W(i, j) = sigma_w * rng.gaussian();
  for (int j = 0; j < hidden; ++j)
    for (int k = 0; k < classes; ++k) p.U(j, k) = sigma_w * rng.gaussian();
  return p;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double t) { return sigmoid(t); });
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) throw std::invalid_argument("softmax: empty input");
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

double energy(const RbmParams& p, const Eigen::VectorXd& v, const Eigen::VectorXd& h,
              const Eigen::VectorXd& z) {
  check_dims(p);
  if (v.size() != p.a.size() || h.size() != p.b.size()) {
    throw std::invalid_argument("energy: state dimension mismatch");
  }
  double e = -p.a.dot(v) - p.b.dot(h) - v.dot(p.W * h);
  if (z.size() > 0) {
    if (z.size() != p.c.size()) throw std::invalid_argument("energy: class dimension mismatch");
    e += -p.c.dot(z) - h.dot(p.U * z);
  }
  return e;
}

Eigen::VectorXd hidden_activation_probs(const RbmParams& p, const Eigen::VectorXd& v,
                                        const Eigen::VectorXd& z) {
  check_dims(p);
  if (v.size() != p.a.size()) throw std::invalid_argument("hidden_activation_probs: bad v size");
  Eigen::VectorXd pre = p.b + p.W.transpose() * v;
  if (z.size() > 0) {
    if (z.size() != p.c.size()) throw std::invalid_argument("hidden_activation_probs: bad z size");
    pre += p.U * z;
  }
  return sigmoid(pre);
}

Eigen::VectorXd visible_activation_probs(const RbmParams& p, const Eigen::VectorXd& h) {
  check_dims(p);
  if (h.size() != p.b.size()) throw std::invalid_argument("visible_activation_probs: bad h size");
  return sigmoid(p.a + p.W * h);
}

Eigen::VectorXd class_activation_probs(const RbmParams& p, const Eigen::VectorXd& h) {
  check_dims(p);
  if (p.classes() < 2) throw std::invalid_argument("class_activation_probs: fewer than two classes");
  if (h.size() != p.b.size()) throw std::invalid_argument("class_activation_probs: bad h size");
  return softmax(p.c + p.U.transpose() * h);
}

Eigen::VectorXd one_hot(int k, int classes) {
  if (k < 0 || k >= classes) throw std::invalid_argument("one_hot: class index out of range");
  Eigen::VectorXd z = Eigen::VectorXd::Zero(classes);
  z[k] = 1.0;
  return z;
}

LayerState gibbs_step(const RbmParams& p, const LayerState& s, Rng& rng) {
  LayerState out;
  out.h = sample_bernoulli(hidden_activation_probs(p, s.v, s.z), rng);
  out.v = sample_bernoulli(visible_activation_probs(p, out.h), rng);
  if (s.z.size() > 0) out.z = sample_categorical_onehot(class_activation_probs(p, out.h), rng);
  return out;
}

RbmParams cd_k_update_weighted(const MiniBatch& batch, const RbmParams& p, const CdConfig& cfg,
                               Rng& rng, const Eigen::VectorXd* weights,
                               const Eigen::MatrixXd* gates) {
  check_dims(p);
  if (batch.items.empty()) throw std::invalid_argument("cd_k_update: empty batch");
  if (cfg.eta < 0.0) throw std::invalid_argument("cd_k_update: negative eta");
  if (cfg.k < 1) throw std::invalid_argument("cd_k_update: k must be >= 1");
  if (weights && weights->size() != batch.size()) {
    throw std::invalid_argument("cd_k_update: weight count mismatch");
  }
  if (gates && (gates->rows() != batch.size() || gates->cols() != p.visible())) {
    throw std::invalid_argument("cd_k_update: gate shape mismatch");
  }

  const int V = p.visible(), H = p.hidden(), Z = p.classes();
  Eigen::VectorXd da = Eigen::VectorXd::Zero(V), ra = Eigen::VectorXd::Zero(V);
  Eigen::VectorXd db = Eigen::VectorXd::Zero(H), rb = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(Z), rc = Eigen::VectorXd::Zero(Z);
  Eigen::MatrixXd dW = Eigen::MatrixXd::Zero(V, H), rW = Eigen::MatrixXd::Zero(V, H);
  Eigen::MatrixXd dU = Eigen::MatrixXd::Zero(H, Z), rU = Eigen::MatrixXd::Zero(H, Z);
  Eigen::VectorXd feat_w = Eigen::VectorXd::Zero(V);
  double sum_w = 0.0, sum_w_label = 0.0;

  for (int n = 0; n < batch.size(); ++n) {
    const BatchItem& it = batch.items[n];
    if (it.v.size() != V) throw std::invalid_argument("cd_k_update: instance dimension mismatch");
    const double w = weights ? (*weights)[n] : 1.0;
    Eigen::VectorXd g =
        gates ? Eigen::VectorXd(gates->row(n).transpose()) : Eigen::VectorXd::Ones(V);
    const bool labelled = it.label != kNoLabel;
    if (labelled && (it.label < 0 || it.label >= Z)) {
      throw std::invalid_argument("cd_k_update: label out of range");
    }
    Eigen::VectorXd z0;
    if (labelled) z0 = one_hot(it.label, Z);

    // data phase, mean-field hidden
    Eigen::VectorXd h0 = hidden_activation_probs(p, it.v, z0);

    // chain: sampled states for the intermediate steps
    Eigen::VectorXd h_s = sample_bernoulli(h0, rng);
    for (int step = 1; step < cfg.k; ++step) {
      Eigen::VectorXd v_s = sample_bernoulli(visible_activation_probs(p, h_s), rng);
      Eigen::VectorXd z_s;
      if (labelled) z_s = sample_categorical_onehot(class_activation_probs(p, h_s), rng);
      h_s = sample_bernoulli(hidden_activation_probs(p, v_s, z_s), rng);
    }

    // reconstruction phase, mean-field
    Eigen::VectorXd vk = visible_activation_probs(p, h_s);
    Eigen::VectorXd zk;
    if (labelled) zk = class_activation_probs(p, h_s);
    Eigen::VectorXd hk = hidden_activation_probs(p, vk, zk);

    Eigen::VectorXd gv0 = g.cwiseProduct(it.v);
    Eigen::VectorXd gvk = g.cwiseProduct(vk);
    da += w * gv0;
    ra += w * gvk;
    dW += (w * gv0) * h0.transpose();
    rW += (w * gvk) * hk.transpose();
    db += w * h0;
    rb += w * hk;
    sum_w += w;
    feat_w += w * g;
    if (labelled) {
      dc += w * z0;
      rc += w * zk;
      dU += (w * h0) * z0.transpose();
      rU += (w * hk) * zk.transpose();
      sum_w_label += w;
    }
  }

  RbmParams out = p;
  if (sum_w > 0.0) {
    out.b += (cfg.eta / sum_w) * (db - rb);
    for (int i = 0; i < V; ++i) {
      if (feat_w[i] > 0.0) {
        out.a[i] += (cfg.eta / feat_w[i]) * (da[i] - ra[i]);
        out.W.row(i) += (cfg.eta / feat_w[i]) * (dW.row(i) - rW.row(i));
      }
    }
  }
  if (sum_w_label > 0.0) {
    out.c += (cfg.eta / sum_w_label) * (dc - rc);
    out.U += (cfg.eta / sum_w_label) * (dU - rU);
  }
  return out;
}

RbmParams cd_k_update(const MiniBatch& batch, const RbmParams& p, const CdConfig& cfg, Rng& rng) {
  return cd_k_update_weighted(batch, p, cfg, rng, nullptr, nullptr);
}

void reconstruct(const RbmParams& p, const Eigen::VectorXd& v, int label, Eigen::VectorXd* x_out,
                 Eigen::VectorXd* y_out) {
  Eigen::VectorXd z;
  if (label != kNoLabel) z = one_hot(label, p.classes());
  Eigen::VectorXd h = hidden_activation_probs(p, v, z);
  if (x_out) *x_out = visible_activation_probs(p, h);
  if (y_out) {
    if (label != kNoLabel) {
      *y_out = class_activation_probs(p, h);
    } else {
      y_out->resize(0);
    }
  }
}

double instance_error(const RbmParams& p, const Eigen::VectorXd& v, int label) {
  Eigen::VectorXd xr, yr;
  reconstruct(p, v, label, &xr, &yr);
  double sq = (v - xr).squaredNorm();
  if (label != kNoLabel) sq += (one_hot(label, p.classes()) - yr).squaredNorm();
  return std::sqrt(sq);
}

double batch_error(const RbmParams& p, const MiniBatch& batch) {
  if (batch.items.empty()) throw std::invalid_argument("batch_error: empty batch");
  double sum = 0.0;
  for (const BatchItem& it : batch.items) sum += instance_error(p, it.v, it.label);
  return sum / static_cast<double>(batch.size());
}

int predict_class(const RbmParams& p, const Eigen::VectorXd& v) {
  Eigen::VectorXd h = hidden_activation_probs(p, v, Eigen::VectorXd());
  Eigen::VectorXd probs = class_activation_probs(p, h);
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<int>(best);
}

void save_rbm(std::ostream& os, const RbmParams& p) {
  os << std::setprecision(17);
  os << "rbm " << p.visible() << ' ' << p.hidden() << ' ' << p.classes() << '\n';
  auto dump_vec = [&os](const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << v[i] << (i + 1 < v.size() ? ' ' : '\n');
  };
  dump_vec(p.a);
  dump_vec(p.b);
  dump_vec(p.c);
  for (int i = 0; i < p.visible(); ++i) dump_vec(Eigen::VectorXd(p.W.row(i).transpose()));
  for (int j = 0; j < p.hidden(); ++j) dump_vec(Eigen::VectorXd(p.U.row(j).transpose()));
}

RbmParams load_rbm(std::istream& is) {
  std::string tag;
  int V = 0, H = 0, Z = 0;
  if (!(is >> tag >> V >> H >> Z) || tag != "rbm") {
    throw std::runtime_error("load_rbm: malformed header");
  }
  if (V < 1 || H < 1 || Z < 2) throw std::runtime_error("load_rbm: bad dimensions");
  RbmParams p;
  p.a.resize(V);
  p.b.resize(H);
  p.c.resize(Z);
  p.W.resize(V, H);
  p.U.resize(H, Z);
  auto read_into = [&is](double& slot) {
    if (!(is >> slot)) throw std::runtime_error("load_rbm: truncated payload");
  };
  for (int i = 0; i < V; ++i) read_into(p.a[i]);
  for (int j = 0; j < H; ++j) read_into(p.b[j]);
  for (int k = 0; k < Z; ++k) read_into(p.c[k]);
  for (int i = 0; i < V; ++i)
    for (int j = 0; j < H; ++j) read_into(p.W(i, j));
  for (int j = 0; j < H; ++j)
    for (int k = 0; k < Z; ++k) read_into(p.U(j, k));
  return p;
}

void save_rbm_file(const std::string& path, const RbmParams& p) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_rbm_file: cannot open " + path);
  save_rbm(os, p);
}

RbmParams load_rbm_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_rbm_file: cannot open " + path);
  return load_rbm(is);
}

}  // namespace driftlab
