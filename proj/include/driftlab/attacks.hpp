#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "driftlab/instance.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/streams.hpp"

namespace driftlab {

enum class AttackKind { none, instance_based, concept_based };

struct AttackPlan {
  AttackKind kind = AttackKind::none;
  double instance_ratio = 0.0;
  int concept_count = 0;
  int concept_size = 250;
};

struct LabelBudget {
  double fraction = 1.0;
};

struct AuditRow {
  std::int64_t index = 0;
  char kind = 'f';  // 'f' label flip, 'i' injected instance
  int original_label = kNoLabel;
  int new_label = kNoLabel;
};
using AttackAudit = std::vector<AuditRow>;

// Flips each instance's label with probability `ratio` to a uniformly random
// different class, marking it poisoned.
class FlipLabels : public StreamSource {
 public:
  FlipLabels(std::unique_ptr<StreamSource> base, double ratio, std::uint64_t seed,
             AttackAudit* audit = nullptr);

  bool next(Instance* out) override;
  int n_features() const override { return base_->n_features(); }
  int n_classes() const override { return base_->n_classes(); }
  std::int64_t flipped() const { return flipped_; }

 private:
  std::unique_ptr<StreamSource> base_;
  double ratio_;
  Rng rng_;
  AttackAudit* audit_;
  std::int64_t flipped_ = 0;
};

// Inserts `count` contiguous blocks of `concept_size` instances, each drawn
// from a freshly seeded generator of the same family with different concept
// parameters, at uniformly random positions in the base stream.
class InjectConcepts : public StreamSource {
 public:
  InjectConcepts(const StreamSpec& base_spec, int count, int concept_size, std::uint64_t seed,
                 AttackAudit* audit = nullptr);

  bool next(Instance* out) override;
  int n_features() const override { return base_spec_.n_features; }
  int n_classes() const override { return base_spec_.n_classes; }
  const std::vector<std::int64_t>& positions() const { return positions_; }

 private:
  void start_block(int block);

  StreamSpec base_spec_;
  int concept_size_;
  std::uint64_t seed_;
  AttackAudit* audit_;
  SyntheticStream base_;
  std::vector<std::int64_t> positions_;
  int next_block_ = 0;
  std::unique_ptr<SyntheticStream> block_gen_;
  int block_remaining_ = 0;
  std::int64_t base_emitted_ = 0;
  std::int64_t emitted_ = 0;
};

// Hides each instance's label with probability 1 - fraction; the hidden label
// is retained on the record for scoring but flagged invisible.
class SparsifyLabels : public StreamSource {
 public:
  SparsifyLabels(std::unique_ptr<StreamSource> base, double fraction, std::uint64_t seed);

  bool next(Instance* out) override;
  int n_features() const override { return base_->n_features(); }
  int n_classes() const override { return base_->n_classes(); }

 private:
  std::unique_ptr<StreamSource> base_;
  double fraction_;
  Rng rng_;
};

struct RunStream {
  std::unique_ptr<StreamSource> source;
  std::int64_t length = 0;
  std::int64_t true_change = -1;
};

// Composes base generator -> concept injection -> label flips -> label budget
// and maps the base concept-change index through any inserted blocks. The
// budget mask has its own seed so clean and flipped runs of the same cell see
// identical label visibility.
RunStream make_attacked_stream(const StreamSpec& base_spec, const AttackPlan& plan,
                               const LabelBudget& budget, std::uint64_t attack_seed,
                               std::uint64_t budget_seed, AttackAudit* audit = nullptr);

void write_audit_csv(const AttackAudit& audit, const std::string& path);

}  // namespace driftlab
