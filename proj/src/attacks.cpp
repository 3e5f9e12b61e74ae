#include "driftlab/attacks.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace driftlab {

FlipLabels::FlipLabels(std::unique_ptr<StreamSource> base, double ratio, std::uint64_t seed,
                       AttackAudit* audit)
    : base_(std::move(base)), ratio_(ratio), rng_(seed), audit_(audit) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("flip_labels: ratio must be in [0, 1]");
  }
  if (base_->n_classes() < 2) {
    throw std::invalid_argument("flip_labels: need at least two classes");
  }
}

bool FlipLabels::next(Instance* out) {
  if (!base_->next(out)) return false;
  if (rng_.bernoulli(ratio_) && out->label != kNoLabel) {
    int z = base_->n_classes();
    int old = out->label;
    out->label = static_cast<int>((old + 1 + rng_.below(static_cast<std::uint64_t>(z) - 1)) % z);
    out->poisoned = true;
    ++flipped_;
    if (audit_) audit_->push_back({out->index, 'f', old, out->label});
  }
  return true;
}

InjectConcepts::InjectConcepts(const StreamSpec& base_spec, int count, int concept_size,
                               std::uint64_t seed, AttackAudit* audit)
    : base_spec_(base_spec),
      concept_size_(concept_size),
      seed_(seed),
      audit_(audit),
      base_(base_spec) {
  if (count < 0) throw std::invalid_argument("inject_concepts: count must be >= 0");
  if (concept_size < 1) throw std::invalid_argument("inject_concepts: concept_size must be >= 1");
  Rng pos_rng(derive_seed(seed, "positions"));
  positions_.reserve(count);
  for (int i = 0; i < count; ++i) {
    positions_.push_back(
        static_cast<std::int64_t>(pos_rng.below(static_cast<std::uint64_t>(base_spec_.length) + 1)));
  }
  std::sort(positions_.begin(), positions_.end());
}

void InjectConcepts::start_block(int block) {
  StreamSpec g = base_spec_;
  g.name = base_spec_.name + "-injected";
  g.length = concept_size_;
  g.kind = DriftKind::none;
  g.t1 = 0;
  g.t2 = 0;
  g.seed = derive_seed(seed_, "block|" + std::to_string(block));
  g.concept_offset = 2 + block % 2;
  block_gen_ = std::make_unique<SyntheticStream>(g);
  block_remaining_ = concept_size_;
}

bool InjectConcepts::next(Instance* out) {
  for (;;) {
    if (block_remaining_ > 0) {
      block_gen_->next(out);
      --block_remaining_;
      out->poisoned = true;
      out->concept_src = 2;
      out->index = emitted_++;
      if (audit_) audit_->push_back({out->index, 'i', kNoLabel, out->label});
      return true;
    }
    if (next_block_ < static_cast<int>(positions_.size()) &&
        positions_[next_block_] == base_emitted_) {
      start_block(next_block_);
      ++next_block_;
      continue;
    }
    if (!base_.next(out)) return false;
    ++base_emitted_;
    out->index = emitted_++;
    return true;
  }
}

SparsifyLabels::SparsifyLabels(std::unique_ptr<StreamSource> base, double fraction,
                               std::uint64_t seed)
    : base_(std::move(base)), fraction_(fraction), rng_(seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("sparsify_labels: fraction must be in (0, 1]");
  }
}

bool SparsifyLabels::next(Instance* out) {
  if (!base_->next(out)) return false;
  out->label_visible = out->label_visible && rng_.bernoulli(fraction_);
  return true;
}

RunStream make_attacked_stream(const StreamSpec& base_spec, const AttackPlan& plan,
                               const LabelBudget& budget, std::uint64_t attack_seed,
                               std::uint64_t budget_seed, AttackAudit* audit) {
  RunStream run;
  run.length = base_spec.length;
  run.true_change = base_spec.kind == DriftKind::none ? -1 : base_spec.t1;

  std::unique_ptr<StreamSource> src;
  if (plan.kind == AttackKind::concept_based && plan.concept_count > 0) {
    auto inj = std::make_unique<InjectConcepts>(base_spec, plan.concept_count, plan.concept_size,
                                                derive_seed(attack_seed, "inject"), audit);
    run.length += static_cast<std::int64_t>(plan.concept_count) * plan.concept_size;
    if (run.true_change >= 0) {
      std::int64_t shift = 0;
      for (std::int64_t p : inj->positions()) {
        if (p <= base_spec.t1) shift += plan.concept_size;
      }
      run.true_change += shift;
    }
    src = std::move(inj);
  } else {
    src = std::make_unique<SyntheticStream>(base_spec);
  }

  if (plan.kind == AttackKind::instance_based && plan.instance_ratio > 0.0) {
    src = std::make_unique<FlipLabels>(std::move(src), plan.instance_ratio,
                                       derive_seed(attack_seed, "flip"), audit);
  }

  if (budget.fraction < 1.0) {
    src = std::make_unique<SparsifyLabels>(std::move(src), budget.fraction, budget_seed);
  }

  run.source = std::move(src);
  return run;
}

void write_audit_csv(const AttackAudit& audit, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("audit: cannot write " + path);
  out << "index,kind,original_label,new_label\n";
  for (const AuditRow& row : audit) {
    out << row.index << ',' << row.kind << ',' << row.original_label << ',' << row.new_label
        << '\n';
  }
}

}  // namespace driftlab
