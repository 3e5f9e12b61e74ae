#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "driftlab/attacks.hpp"
#include "driftlab/baselines.hpp"
#include "driftlab/learner.hpp"
#include "driftlab/rbm_detector.hpp"
#include "driftlab/streams.hpp"

namespace driftlab {

struct HarnessConfig {
  std::int64_t window = 1000;
  int batch_size = 50;
  RbmDetectorConfig rbm;
  ProtocolConfig learner;
  Eddm::Params eddm;
  Ecdd::Params ecdd;
  Fhddm::Params fhddm;
  Rddm::Params rddm;
  Wstd::Params wstd;
};

// A detector is either per-instance boolean (the classical baselines) or the
// mini-batch reconstruction-error pipeline; exactly one pointer is set.
struct Detector {
  std::unique_ptr<BooleanDetector> boolean;
  std::unique_ptr<RbmDriftDetector> rbm;
};

const std::vector<std::string>& known_detectors();
bool is_rbm_detector(const std::string& name);
Detector make_detector(const std::string& name, int n_features, int n_classes,
                       const HarnessConfig& cfg, std::uint64_t seed);

struct WindowPoint {
  std::int64_t window = 0;
  double accuracy = 0.0;
  std::int64_t size = 0;
};

struct DetectionEvent {
  std::int64_t index = 0;
  SignalLevel level = SignalLevel::Stable;
};

struct RunResult {
  std::string stream;
  std::string detector;
  std::string attack = "none";
  double level = 0.0;
  double budget = 1.0;
  int repeat = 0;
  std::uint64_t seed = 0;
  std::int64_t instances = 0;
  std::int64_t full_windows = 0;
  double mean_accuracy = 0.0;
  std::int64_t detections = 0;
  std::int64_t false_alarms = 0;
  std::int64_t delay = -1;
  std::int64_t true_change = -1;
  double wall_seconds = 0.0;
  std::vector<WindowPoint> window_series;
  std::vector<DetectionEvent> events;
};

// Test-then-train loop: predict, score against the observed label, feed the
// detector, apply the rebuild protocol, then learn when the label is visible.
RunResult prequential_run(StreamSource& stream, ProtocolLearner& learner, Detector& detector,
                          const HarnessConfig& cfg, std::int64_t true_change = -1,
                          bool keep_window_series = false);

double rlr_level(double m0, double ml);
double rlr_aggregate(const std::vector<double>& rlr_levels, const std::vector<double>& weights,
                     bool strict_formula = false);

// A matrix stream is either a synthetic spec or a CSV file; CSV streams take
// label flips and budgets but not concept injection (no generator to draw a
// coherent fake concept from).
struct MatrixStream {
  StreamSpec spec;
  std::string csv_path;
  std::string label_column = "label";
  int max_malformed = 100;
};

struct MatrixPlan {
  std::vector<MatrixStream> streams;
  std::vector<std::string> detectors;
  std::vector<double> instance_ratios;
  std::vector<int> concept_counts;
  int concept_size = 250;
  std::vector<double> budgets{1.0};
  int repeats = 1;
  std::uint64_t master_seed = 1;
  std::vector<double> rlr_weights;  // empty = equal weights per level
  bool rlr_strict = false;
  int jobs = 1;
  HarnessConfig harness;
};

struct RlrRow {
  std::string stream;
  std::string detector;
  std::string attack;
  double budget = 1.0;
  std::vector<double> level_values;
  std::vector<double> rlr_levels;
  double rlr_agg = 0.0;
};

struct MatrixResult {
  std::vector<RunResult> runs;
  std::vector<RlrRow> rlr;
};

// Cross product of streams x detectors x budgets x repeats: one clean run per
// cell plus one run per attack level, with seeds derived from the master seed
// and the run coordinates. Runs execute on `jobs` threads; output order is the
// plan order regardless of scheduling. On failure, runs completed before the
// first error are copied to `partial_sink` (when given) before the rethrow.
MatrixResult run_matrix(const MatrixPlan& plan, std::vector<RunResult>* partial_sink = nullptr);

void write_runs_csv(const std::vector<RunResult>& runs, const std::string& path);
void write_runs_meta_csv(const std::vector<RunResult>& runs, const std::string& path);
void write_rlr_csv(const std::vector<RlrRow>& rows, const std::string& path);

}  // namespace driftlab
