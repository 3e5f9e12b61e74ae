#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "driftlab/instance.hpp"
#include "driftlab/rbm.hpp"
#include "driftlab/rng.hpp"

using namespace driftlab;

namespace {

RbmParams zero_params(int v, int h, int z) {
  RbmParams p;
  p.a = Eigen::VectorXd::Zero(v);
  p.b = Eigen::VectorXd::Zero(h);
  p.c = Eigen::VectorXd::Zero(z);
  p.W = Eigen::MatrixXd::Zero(v, h);
  p.U = Eigen::MatrixXd::Zero(h, z);
  return p;
}

MiniBatch make_batch(const std::vector<Eigen::VectorXd>& xs, const std::vector<int>& labels) {
  MiniBatch b;
  for (std::size_t i = 0; i < xs.size(); ++i) b.items.push_back({xs[i], labels[i]});
  b.t = 1;
  return b;
}

bool same_params(const RbmParams& x, const RbmParams& y) {
  return x.a == y.a && x.b == y.b && x.c == y.c && x.W == y.W && x.U == y.U;
}

}  // namespace

TEST_CASE("sigmoid fixed values") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(2.0) == doctest::Approx(0.8807970779778823).epsilon(1e-14));
  CHECK(sigmoid(-1.0) == doctest::Approx(0.2689414213699951).epsilon(1e-14));
  CHECK(sigmoid(1.0) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
  CHECK(sigmoid(3.0) == doctest::Approx(0.9525741268224332).epsilon(1e-14));
  Eigen::VectorXd x(3);
  x << -1.0, 0.0, 2.0;
  Eigen::VectorXd s = sigmoid(x);
  for (int i = 0; i < 3; ++i) CHECK(s[i] == sigmoid(x[i]));
}

TEST_CASE("softmax is shift invariant and normalized") {
  Eigen::VectorXd logits(3);
  logits << 0.0, std::log(2.0), std::log(4.0);
  Eigen::VectorXd p = softmax(logits);
  CHECK(p[0] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
  Eigen::VectorXd shifted = softmax(logits.array() + 137.0);
  for (int i = 0; i < 3; ++i) CHECK(shifted[i] == doctest::Approx(p[i]).epsilon(1e-12));
  CHECK(softmax(Eigen::VectorXd::Zero(4)).isApproxToConstant(0.25, 1e-12));
  CHECK_THROWS(softmax(Eigen::VectorXd()));
}

TEST_CASE("hidden activations from each parameter block") {
  RbmParams p = zero_params(1, 1, 2);
  Eigen::VectorXd v1 = Eigen::VectorXd::Ones(1);
  CHECK(hidden_activation_probs(p, v1, Eigen::VectorXd())[0] == 0.5);

  p.W(0, 0) = 2.0;
  CHECK(hidden_activation_probs(p, v1, Eigen::VectorXd())[0] ==
        doctest::Approx(0.8807970779778823).epsilon(1e-14));

  RbmParams q = zero_params(1, 2, 2);
  q.b << -1.0, 1.0;
  Eigen::VectorXd hb = hidden_activation_probs(q, Eigen::VectorXd::Zero(1), Eigen::VectorXd());
  CHECK(hb[0] == doctest::Approx(sigmoid(-1.0)).epsilon(1e-14));
  CHECK(hb[1] == doctest::Approx(sigmoid(1.0)).epsilon(1e-14));

  RbmParams r = zero_params(1, 1, 2);
  r.U(0, 0) = 1.0;
  CHECK(hidden_activation_probs(r, Eigen::VectorXd::Zero(1), one_hot(0, 2))[0] ==
        doctest::Approx(sigmoid(1.0)).epsilon(1e-14));
  CHECK(hidden_activation_probs(r, Eigen::VectorXd::Zero(1), one_hot(1, 2))[0] == 0.5);
}

TEST_CASE("visible activations") {
  RbmParams p = zero_params(2, 1, 2);
  Eigen::VectorXd h0 = Eigen::VectorXd::Zero(1);
  CHECK(visible_activation_probs(p, h0).isApproxToConstant(0.5, 1e-15));
  p.a << 3.0, -1.0;
  Eigen::VectorXd vp = visible_activation_probs(p, h0);
  CHECK(vp[0] == doctest::Approx(sigmoid(3.0)).epsilon(1e-14));
  CHECK(vp[1] == doctest::Approx(sigmoid(-1.0)).epsilon(1e-14));
}

TEST_CASE("class activations are a softmax over bias plus hidden drive") {
  RbmParams p = zero_params(1, 1, 3);
  Eigen::VectorXd h0 = Eigen::VectorXd::Zero(1);
  CHECK(class_activation_probs(p, h0).isApproxToConstant(1.0 / 3.0, 1e-12));
  p.c << 0.0, std::log(2.0), std::log(4.0);
  Eigen::VectorXd cp = class_activation_probs(p, h0);
  CHECK(cp[0] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(cp[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
  CHECK(cp[2] == doctest::Approx(4.0 / 7.0).epsilon(1e-12));

  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    RbmParams q = init_rbm(3, 4, 5, rng, 1.0);
    for (int j = 0; j < 4; ++j) q.b[j] = rng.gaussian();
    for (int k = 0; k < 5; ++k) q.c[k] = rng.gaussian();
    Eigen::VectorXd h(4);
    for (int j = 0; j < 4; ++j) h[j] = rng.uniform();
    Eigen::VectorXd probs = class_activation_probs(q, h);
    CHECK(probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(probs.minCoeff() > 0.0);
  }
}

TEST_CASE("energy matches the elementwise definition") {
  RbmParams p = zero_params(2, 3, 2);
  CHECK(energy(p, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3), one_hot(0, 2)) == 0.0);

  RbmParams ones = zero_params(1, 1, 1 + 1);
  ones.a.setOnes();
  ones.b.setOnes();
  ones.c.setOnes();
  ones.W.setOnes();
  ones.U.setOnes();
  Eigen::VectorXd u1 = Eigen::VectorXd::Ones(1);
  CHECK(energy(ones, u1, u1, one_hot(0, 2)) == doctest::Approx(-5.0).epsilon(1e-15));

  // dropping z removes exactly the class terms
  CHECK(energy(ones, u1, u1, Eigen::VectorXd()) == doctest::Approx(-3.0).epsilon(1e-15));

  Rng rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    int V = 1 + static_cast<int>(rng.below(5));
    int H = 1 + static_cast<int>(rng.below(5));
    int Z = 2 + static_cast<int>(rng.below(4));
    RbmParams q = init_rbm(V, H, Z, rng, 0.7);
    for (int i = 0; i < V; ++i) q.a[i] = rng.gaussian();
    for (int j = 0; j < H; ++j) q.b[j] = rng.gaussian();
    for (int k = 0; k < Z; ++k) q.c[k] = rng.gaussian();
    Eigen::VectorXd v(V), h(H);
    for (int i = 0; i < V; ++i) v[i] = rng.uniform();
    for (int j = 0; j < H; ++j) h[j] = rng.uniform();
    bool labelled = rng.bernoulli(0.5);
    Eigen::VectorXd z;
    if (labelled) z = one_hot(static_cast<int>(rng.below(static_cast<std::uint64_t>(Z))), Z);

    double naive = 0.0;
    for (int i = 0; i < V; ++i) naive -= q.a[i] * v[i];
    for (int j = 0; j < H; ++j) naive -= q.b[j] * h[j];
    for (int i = 0; i < V; ++i)
      for (int j = 0; j < H; ++j) naive -= v[i] * q.W(i, j) * h[j];
    if (labelled) {
      for (int k = 0; k < Z; ++k) naive -= q.c[k] * z[k];
      for (int j = 0; j < H; ++j)
        for (int k = 0; k < Z; ++k) naive -= h[j] * q.U(j, k) * z[k];
    }
    CHECK(energy(q, v, h, z) == doctest::Approx(naive).epsilon(1e-10));
  }
}

TEST_CASE("one_hot encodes and validates") {
  Eigen::VectorXd z = one_hot(1, 3);
  CHECK(z.size() == 3);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 1.0);
  CHECK(z[2] == 0.0);
  CHECK_THROWS(one_hot(-1, 3));
  CHECK_THROWS(one_hot(3, 3));
}

TEST_CASE("gibbs step replays under the same seed") {
  Rng init_rng(5);
  RbmParams p = init_rbm(4, 3, 2, init_rng, 0.5);
  LayerState s;
  s.v = Eigen::VectorXd::Ones(4) * 0.5;
  s.h = Eigen::VectorXd::Zero(3);
  s.z = one_hot(0, 2);
  Rng r1(77), r2(77);
  LayerState a = s, b = s;
  for (int i = 0; i < 100; ++i) {
    a = gibbs_step(p, a, r1);
    b = gibbs_step(p, b, r2);
    CHECK(a.v == b.v);
    CHECK(a.h == b.h);
    CHECK(a.z == b.z);
  }
}

TEST_CASE("gibbs step keeps the class layer one-hot and samples fairly at zero parameters") {
  RbmParams p = zero_params(1, 1, 3);
  Rng rng(13);
  LayerState s;
  s.v = Eigen::VectorXd::Zero(1);
  s.h = Eigen::VectorXd::Zero(1);
  s.z = one_hot(2, 3);
  double h_sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    s = gibbs_step(p, s, rng);
    CHECK(s.z.sum() == 1.0);
    CHECK((s.z.array() == 0.0 || s.z.array() == 1.0).all());
    h_sum += s.h[0];
  }
  CHECK(h_sum / n == doctest::Approx(0.5).epsilon(0.02));

  LayerState unl;
  unl.v = Eigen::VectorXd::Zero(1);
  unl.h = Eigen::VectorXd::Zero(1);
  LayerState out = gibbs_step(p, unl, rng);
  CHECK(out.z.size() == 0);
}

TEST_CASE("contrastive divergence validates its inputs") {
  Rng rng(3);
  RbmParams p = zero_params(2, 2, 2);
  MiniBatch batch = make_batch({Eigen::VectorXd::Ones(2)}, {0});
  CdConfig cfg;
  cfg.eta = -0.1;
  CHECK_THROWS(cd_k_update(batch, p, cfg, rng));
  cfg.eta = 0.05;
  cfg.k = 0;
  CHECK_THROWS(cd_k_update(batch, p, cfg, rng));
  cfg.k = 1;
  CHECK_THROWS(cd_k_update(MiniBatch{}, p, cfg, rng));
  Eigen::VectorXd bad_w = Eigen::VectorXd::Ones(2);
  CHECK_THROWS(cd_k_update_weighted(batch, p, cfg, rng, &bad_w, nullptr));
  Eigen::MatrixXd bad_g = Eigen::MatrixXd::Ones(1, 3);
  CHECK_THROWS(cd_k_update_weighted(batch, p, cfg, rng, nullptr, &bad_g));
}

TEST_CASE("contrastive divergence leaves parameters alone when eta is zero") {
  Rng init_rng(21);
  RbmParams p = init_rbm(3, 2, 2, init_rng, 0.3);
  MiniBatch batch = make_batch({Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(3)}, {0, 1});
  Rng rng(9);
  CdConfig cfg;
  cfg.eta = 0.0;
  RbmParams out = cd_k_update(batch, p, cfg, rng);
  CHECK(same_params(out, p));
}

TEST_CASE("contrastive divergence has no gradient at the fixed point") {
  // at zero parameters every phase sits at probability one half, so an
  // unlabelled batch of 0.5-valued features produces a zero update
  RbmParams p = zero_params(2, 3, 2);
  MiniBatch batch = make_batch(
      {Eigen::VectorXd::Constant(2, 0.5), Eigen::VectorXd::Constant(2, 0.5)}, {kNoLabel, kNoLabel});
  Rng rng(41);
  CdConfig cfg;
  RbmParams out = cd_k_update(batch, p, cfg, rng);
  CHECK(same_params(out, p));
}

TEST_CASE("contrastive divergence moves biases toward the data") {
  RbmParams p = zero_params(1, 2, 2);
  p.a[0] = -1.0;
  MiniBatch batch;
  for (int i = 0; i < 8; ++i) batch.items.push_back({Eigen::VectorXd::Ones(1), 0});
  Rng rng(55);
  CdConfig cfg;
  RbmParams out = cd_k_update(batch, p, cfg, rng);
  // every data vector has v = 1 while the reconstruction sits near sigmoid(-1)
  CHECK(out.a[0] > p.a[0]);
  // label 0 on every instance pulls the class biases apart
  CHECK(out.c[0] > 0.0);
  CHECK(out.c[1] < 0.0);
  CHECK(out.c[0] == doctest::Approx(-out.c[1]).epsilon(1e-12));
}

TEST_CASE("contrastive divergence replays under the same seed and keeps shapes") {
  Rng init_rng(17);
  RbmParams p = init_rbm(4, 3, 3, init_rng, 0.1);
  MiniBatch batch;
  Rng data_rng(23);
  for (int i = 0; i < 16; ++i) {
    Eigen::VectorXd x(4);
    for (int d = 0; d < 4; ++d) x[d] = data_rng.uniform();
    int label = i % 4 == 0 ? kNoLabel : static_cast<int>(data_rng.below(3));
    batch.items.push_back({x, label});
  }
  CdConfig cfg;
  cfg.k = 2;
  Rng r1(101), r2(101);
  RbmParams o1 = cd_k_update(batch, p, cfg, r1);
  RbmParams o2 = cd_k_update(batch, p, cfg, r2);
  CHECK(same_params(o1, o2));
  CHECK(o1.visible() == 4);
  CHECK(o1.hidden() == 3);
  CHECK(o1.classes() == 3);
}

TEST_CASE("unit weights and open gates reproduce the plain update") {
  Rng init_rng(31);
  RbmParams p = init_rbm(3, 2, 2, init_rng, 0.2);
  MiniBatch batch;
  Rng data_rng(37);
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd x(3);
    for (int d = 0; d < 3; ++d) x[d] = data_rng.uniform();
    batch.items.push_back({x, static_cast<int>(data_rng.below(2))});
  }
  CdConfig cfg;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(batch.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Ones(batch.size(), 3);
  Rng r1(7), r2(7);
  RbmParams plain = cd_k_update(batch, p, cfg, r1);
  RbmParams weighted = cd_k_update_weighted(batch, p, cfg, r2, &w, &g);
  CHECK(same_params(plain, weighted));
}

TEST_CASE("reconstruction drops the class output for unlabelled input") {
  RbmParams p = zero_params(2, 2, 3);
  Eigen::VectorXd x, y;
  reconstruct(p, Eigen::VectorXd::Constant(2, 0.5), kNoLabel, &x, &y);
  CHECK(x.isApproxToConstant(0.5, 1e-15));
  CHECK(y.size() == 0);
  reconstruct(p, Eigen::VectorXd::Constant(2, 0.5), 1, &x, &y);
  CHECK(y.isApproxToConstant(1.0 / 3.0, 1e-12));
}

TEST_CASE("instance error closed forms at zero parameters") {
  RbmParams p = zero_params(2, 2, 2);
  CHECK(instance_error(p, Eigen::VectorXd::Constant(2, 0.5), kNoLabel) == 0.0);
  Eigen::VectorXd v(2);
  v << 0.8, 0.9;
  // reconstruction is 0.5 everywhere: sqrt(0.09 + 0.16) without the class term
  CHECK(instance_error(p, v, kNoLabel) == doctest::Approx(0.5).epsilon(1e-14));
  // the class term adds (1 - 0.5)^2 + (0 - 0.5)^2
  CHECK(instance_error(p, v, 0) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-14));

  MiniBatch batch = make_batch({Eigen::VectorXd::Constant(2, 0.5), v}, {kNoLabel, kNoLabel});
  CHECK(batch_error(p, batch) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("class prediction follows the hidden drive") {
  RbmParams p = zero_params(1, 1, 2);
  p.b[0] = 5.0;
  p.U(0, 0) = 3.0;
  CHECK(predict_class(p, Eigen::VectorXd::Zero(1)) == 0);
  p.U(0, 0) = 0.0;
  p.U(0, 1) = 3.0;
  CHECK(predict_class(p, Eigen::VectorXd::Zero(1)) == 1);
}

TEST_CASE("serialization round-trips exactly") {
  Rng rng(61);
  RbmParams p = init_rbm(5, 4, 3, rng, 0.9);
  for (int i = 0; i < 5; ++i) p.a[i] = rng.gaussian();
  for (int j = 0; j < 4; ++j) p.b[j] = rng.gaussian();
  for (int k = 0; k < 3; ++k) p.c[k] = rng.gaussian();

  std::stringstream ss;
  save_rbm(ss, p);
  RbmParams q = load_rbm(ss);
  CHECK(same_params(p, q));

  std::string path = "rbm_roundtrip_test.txt";
  save_rbm_file(path, p);
  RbmParams r = load_rbm_file(path);
  CHECK(same_params(p, r));
  std::remove(path.c_str());

  std::stringstream bad("rbm 2 2");
  CHECK_THROWS(load_rbm(bad));
  std::stringstream truncated("rbm 2 2 2\n0 0\n0 0\n0 0\n1 2");
  CHECK_THROWS(load_rbm(truncated));
}

TEST_CASE("initialization uses zero biases and small weights") {
  Rng rng(71);
  RbmParams p = init_rbm(50, 25, 4, rng, 0.01);
  CHECK(p.a.isZero());
  CHECK(p.b.isZero());
  CHECK(p.c.isZero());
  CHECK(p.W.rows() == 50);
  CHECK(p.W.cols() == 25);
  CHECK(p.U.rows() == 25);
  CHECK(p.U.cols() == 4);
  double n = static_cast<double>(p.W.size());
  double sd = std::sqrt(p.W.array().square().sum() / n);
  CHECK(sd > 0.009);
  CHECK(sd < 0.011);
  CHECK_THROWS(init_rbm(0, 1, 2, rng));
  CHECK_THROWS(init_rbm(1, 0, 2, rng));
  CHECK_THROWS(init_rbm(1, 1, 1, rng));
}
