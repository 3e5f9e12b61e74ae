/** hoeffding_tree — incremental decision tree with histogram split statistics. */
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

namespace driftlab {

struct TreeConfig {
  int grace_period = 200;
  double split_confidence = 1e-7;  // delta for the Hoeffding bound
  double tie_threshold = 0.05;
  int bins = 10;
  int max_nodes = 2048;
  int max_depth = 30;
};

class HoeffdingTree {
 public:
  HoeffdingTree(int n_features, int n_classes, TreeConfig cfg = {});

  // routes to a leaf and returns its majority class; empty leaves fall back
  // to class 0 with uniform probabilities; never mutates the tree
  int predict(const Eigen::VectorXd& x, Eigen::VectorXd* probs = nullptr) const;

  void learn(const Eigen::VectorXd& x, int label);

  std::int64_t instances_learned() const { return learned_; }
  std::size_t node_count() const { return nodes_.size(); }
  int n_features() const { return n_features_; }
  int n_classes() const { return n_classes_; }

 private:
  struct LeafStats {
    std::vector<double> class_counts;     // may include counts inherited at split
    std::vector<std::uint32_t> hist;      // feature x bin x class
    std::int64_t hist_n = 0;              // instances accumulated into hist
    std::int64_t last_attempt_n = 0;
  };
  struct Node {
    int split_feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    int depth = 0;
    std::unique_ptr<LeafStats> stats;
    bool is_leaf() const { return split_feature < 0; }
  };

  int route(const Eigen::VectorXd& x) const;
  int bin_of(int feature, double value) const;
  void try_split(int node_idx);

  int n_features_, n_classes_;
  TreeConfig cfg_;
  std::vector<Node> nodes_;
  Eigen::VectorXd fmin_, fmax_;
  bool bounds_started_ = false;
  std::int64_t learned_ = 0;
};

}  // namespace driftlab
