#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftlab/eval.hpp"

namespace driftlab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment config as written (JSON), with every default materialized after
// parsing. Attack levels and budgets must come from the documented grids
// unless "allow_custom_levels" is set.
struct ExperimentConfig {
  struct StreamEntry {
    std::string benchmark;  // one of benchmark OR csv is set
    std::string csv;
    std::string name;  // display name; defaults to benchmark name or csv stem
    std::string label_column = "label";
    int max_malformed = 100;
  };

  std::vector<StreamEntry> streams;
  double length_scale = 0.1;
  std::vector<std::string> detectors;
  std::vector<double> instance_ratios;
  std::vector<int> concept_counts;
  int concept_size = 250;
  std::vector<double> budgets{1.0};
  int repeats = 10;
  std::uint64_t master_seed = 0;
  std::string out_dir = "out";
  std::vector<double> rlr_weights;  // empty = equal per level
  bool rlr_strict = false;
  bool allow_custom_levels = false;
  int jobs = 1;
  HarnessConfig harness;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

struct CliOverrides {
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool has_scale = false;
  double scale = 0.1;
  bool has_jobs = false;
  int jobs = 1;
  std::string out_dir;  // empty = keep config value
};

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& overrides);

// Resolves benchmark names to stream specs; throws ConfigError on unknown
// names or a concept attack paired with a CSV stream.
MatrixPlan build_matrix_plan(const ExperimentConfig& cfg);

// Round-trips: parse_experiment_config(resolved_config_json(cfg)) reproduces
// the same plan.
std::string resolved_config_json(const ExperimentConfig& cfg);

}  // namespace driftlab
