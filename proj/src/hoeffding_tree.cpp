#include "driftlab/hoeffding_tree.hpp"

#include <cmath>
#include <stdexcept>

namespace driftlab {

namespace {

double entropy(const std::vector<double>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

}  // namespace

HoeffdingTree::HoeffdingTree(int n_features, int n_classes, TreeConfig cfg)
    : n_features_(n_features), n_classes_(n_classes), cfg_(cfg) {
  if (n_features < 1 || n_classes < 2) {
    throw std::invalid_argument("HoeffdingTree: need at least one feature and two classes");
  }
  Node root;
  root.stats = std::make_unique<LeafStats>();
  root.stats->class_counts.assign(n_classes_, 0.0);
  root.stats->hist.assign(static_cast<std::size_t>(n_features_) * cfg_.bins * n_classes_, 0);
  nodes_.push_back(std::move(root));
  fmin_ = Eigen::VectorXd::Zero(n_features);
  fmax_ = Eigen::VectorXd::Zero(n_features);
}

int HoeffdingTree::route(const Eigen::VectorXd& x) const {
  int idx = 0;
  while (!nodes_[idx].is_leaf()) {
    const Node& n = nodes_[idx];
    idx = x[n.split_feature] <= n.threshold ? n.left : n.right;
  }
  return idx;
}

int HoeffdingTree::bin_of(int feature, double value) const {
  double span = fmax_[feature] - fmin_[feature];
  if (span <= 0.0) return 0;
  int b = static_cast<int>((value - fmin_[feature]) / span * cfg_.bins);
  if (b < 0) b = 0;
  if (b >= cfg_.bins) b = cfg_.bins - 1;
  return b;
}

int HoeffdingTree::predict(const Eigen::VectorXd& x, Eigen::VectorXd* probs) const {
  if (x.size() != n_features_) throw std::invalid_argument("predict: feature dimension mismatch");
  const LeafStats& st = *nodes_[route(x)].stats;
  double total = 0.0;
  for (double c : st.class_counts) total += c;
  if (total <= 0.0) {
    if (probs) *probs = Eigen::VectorXd::Constant(n_classes_, 1.0 / n_classes_);
    return 0;
  }
  int best = 0;
  for (int k = 1; k < n_classes_; ++k) {
    if (st.class_counts[k] > st.class_counts[best]) best = k;
  }
  if (probs) {
    probs->resize(n_classes_);
    for (int k = 0; k < n_classes_; ++k) (*probs)[k] = st.class_counts[k] / total;
  }
  return best;
}

void HoeffdingTree::learn(const Eigen::VectorXd& x, int label) {
  if (x.size() != n_features_) throw std::invalid_argument("learn: feature dimension mismatch");
  if (label < 0 || label >= n_classes_) throw std::invalid_argument("learn: label out of range");
  if (!bounds_started_) {
    fmin_ = x;
    fmax_ = x;
    bounds_started_ = true;
  } else {
    fmin_ = fmin_.cwiseMin(x);
    fmax_ = fmax_.cwiseMax(x);
  }
  ++learned_;
  int leaf = route(x);
  LeafStats& st = *nodes_[leaf].stats;
  st.class_counts[label] += 1.0;
  for (int f = 0; f < n_features_; ++f) {
    std::size_t slot =
        (static_cast<std::size_t>(f) * cfg_.bins + bin_of(f, x[f])) * n_classes_ + label;
    ++st.hist[slot];
  }
  ++st.hist_n;
  if (st.hist_n - st.last_attempt_n >= cfg_.grace_period) {
    st.last_attempt_n = st.hist_n;
    try_split(leaf);
  }
}

void HoeffdingTree::try_split(int node_idx) {
  Node& node = nodes_[node_idx];
  if (node.depth >= cfg_.max_depth) return;
  if (static_cast<int>(nodes_.size()) + 2 > cfg_.max_nodes) return;
  const LeafStats& st = *node.stats;
  const double n = static_cast<double>(st.hist_n);
  if (n < 2.0) return;

  std::vector<double> parent(n_classes_, 0.0);
  for (int b = 0; b < cfg_.bins; ++b) {
    for (int k = 0; k < n_classes_; ++k) {
      parent[k] += st.hist[(static_cast<std::size_t>(0) * cfg_.bins + b) * n_classes_ + k];
    }
  }
  double h_parent = entropy(parent, n);

  double best_gain = 0.0, second_gain = 0.0, best_thr = 0.0;
  int best_feature = -1;
  std::vector<double> best_left(n_classes_), best_right(n_classes_);
  std::vector<double> left(n_classes_), right(n_classes_);
  for (int f = 0; f < n_features_; ++f) {
    double span = fmax_[f] - fmin_[f];
    if (span <= 0.0) continue;
    std::fill(left.begin(), left.end(), 0.0);
    double feature_best = 0.0, feature_thr = 0.0;
    std::vector<double> f_left, f_right;
    double nl = 0.0;
    for (int b = 0; b + 1 < cfg_.bins; ++b) {
      for (int k = 0; k < n_classes_; ++k) {
        double c = st.hist[(static_cast<std::size_t>(f) * cfg_.bins + b) * n_classes_ + k];
        left[k] += c;
        nl += c;
      }
      double nr = n - nl;
      if (nl <= 0.0 || nr <= 0.0) continue;
      for (int k = 0; k < n_classes_; ++k) right[k] = parent[k] - left[k];
      double gain = h_parent - (nl * entropy(left, nl) + nr * entropy(right, nr)) / n;
      if (gain > feature_best) {
        feature_best = gain;
        feature_thr = fmin_[f] + span * (b + 1) / cfg_.bins;
        f_left = left;
        f_right = right;
      }
    }
    if (feature_best > best_gain) {
      second_gain = best_gain;
      best_gain = feature_best;
      best_feature = f;
      best_thr = feature_thr;
      best_left = f_left;
      best_right = f_right;
    } else if (feature_best > second_gain) {
      second_gain = feature_best;
    }
  }
  if (best_feature < 0 || best_gain <= 1e-12) return;

  double range = std::log2(static_cast<double>(n_classes_));
  double eps = std::sqrt(range * range * std::log(1.0 / cfg_.split_confidence) / (2.0 * n));
  if (!(best_gain - second_gain > eps || eps < cfg_.tie_threshold)) return;

  auto make_child = [this](int depth, const std::vector<double>& counts) {
    Node child;
    child.depth = depth;
    child.stats = std::make_unique<LeafStats>();
    child.stats->class_counts = counts;
    child.stats->hist.assign(static_cast<std::size_t>(n_features_) * cfg_.bins * n_classes_, 0);
    return child;
  };
  int left_idx = static_cast<int>(nodes_.size());
  nodes_.push_back(make_child(node.depth + 1, best_left));
  int right_idx = static_cast<int>(nodes_.size());
  nodes_.push_back(make_child(node.depth + 1, best_right));
  Node& parent_node = nodes_[node_idx];  // vector may have reallocated
  parent_node.split_feature = best_feature;
  parent_node.threshold = best_thr;
  parent_node.left = left_idx;
  parent_node.right = right_idx;
  parent_node.stats.reset();
}

}  // namespace driftlab
