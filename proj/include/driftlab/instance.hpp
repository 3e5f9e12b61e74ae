/** instance — stream records and mini-batches. */
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace driftlab {

constexpr int kNoLabel = -1;

// One stream record. The harness keeps both the pre-attack label and the
// observed (possibly flipped) label; scoring always uses the observed one,
// even when the visibility mask hides it from detector and learner.
struct Instance {
  Eigen::VectorXd x;
  int label = kNoLabel;        // observed label after any attack
  int clean_label = kNoLabel;  // label before attacks
  bool label_visible = true;   // label-budget mask
  bool poisoned = false;       // set by attack transformers
  int concept_src = 0;         // which concept generated this record
  std::int64_t index = 0;      // arrival position, 0-based
};

// Batch item in the detector's model space: features scaled to [0, 1],
// label present only when the instance arrived labelled and visible.
struct BatchItem {
  Eigen::VectorXd v;
  int label = kNoLabel;
};

struct MiniBatch {
  std::vector<BatchItem> items;
  std::int64_t t = 0;  // 1-based batch ordinal

  int size() const { return static_cast<int>(items.size()); }
};

}  // namespace driftlab
