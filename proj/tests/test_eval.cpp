#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "driftlab/eval.hpp"
#include "driftlab/rng.hpp"

using namespace driftlab;

namespace {

// fixed-feature stream with a scripted label sequence, for exact accuracy math
class ScriptedStream : public StreamSource {
 public:
  ScriptedStream(std::int64_t length, int label, bool visible = true)
      : length_(length), label_(label), visible_(visible) {}

  bool next(Instance* out) override {
    if (emitted_ >= length_) return false;
    out->x = Eigen::Vector2d(0.25, 0.75);
    out->label = label_;
    out->clean_label = label_;
    out->label_visible = visible_;
    out->poisoned = false;
    out->concept_src = 0;
    out->index = emitted_++;
    return true;
  }
  int n_features() const override { return 2; }
  int n_classes() const override { return 2; }

 private:
  std::int64_t length_;
  int label_;
  bool visible_;
  std::int64_t emitted_ = 0;
};

class ScriptedDetector : public BooleanDetector {
 public:
  explicit ScriptedDetector(std::vector<std::int64_t> drift_at) : drift_at_(std::move(drift_at)) {}

  SignalLevel step(bool) override {
    SignalLevel out = SignalLevel::Stable;
    if (std::find(drift_at_.begin(), drift_at_.end(), steps_) != drift_at_.end()) {
      out = SignalLevel::Drift;
    }
    ++steps_;
    return out;
  }
  void reset() override {}
  std::int64_t steps() const { return steps_; }

 private:
  std::vector<std::int64_t> drift_at_;
  std::int64_t steps_ = 0;
};

StreamSpec matrix_sea(std::int64_t length, const std::string& name) {
  StreamSpec s;
  s.family = StreamFamily::sea;
  s.name = name;
  s.n_features = 3;
  s.n_classes = 4;
  s.length = length;
  return s;
}

}  // namespace

TEST_CASE("rlr per level") {
  CHECK(rlr_level(0.9, 0.45) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rlr_level(0.8, 0.8) == 0.0);
  CHECK(rlr_level(0.5, 0.7) < 0.0);
  CHECK_THROWS(rlr_level(0.0, 0.5));
  CHECK_THROWS(rlr_level(-0.2, 0.5));
}

TEST_CASE("rlr aggregation over levels") {
  std::vector<double> third{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(rlr_aggregate({0.1, 0.2, 0.3}, third) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(rlr_aggregate({0.7, 0.7, 0.7}, third) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(rlr_aggregate({0.1, 0.2, 0.3}, third, true) ==
        doctest::Approx(0.2 / 3.0).epsilon(1e-12));
  CHECK(rlr_aggregate({0.4}, {1.0}) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK_THROWS(rlr_aggregate({0.1, 0.2}, {1.0}));
  CHECK_THROWS(rlr_aggregate({0.1, 0.2}, {0.4, 0.4}));
  CHECK_THROWS(rlr_aggregate({0.1, 0.2}, {1.2, -0.2}));
  CHECK_THROWS(rlr_aggregate({}, {}));
}

TEST_CASE("detector factory") {
  HarnessConfig cfg;
  for (const std::string& name : {"eddm", "ecdd", "fhddm", "rddm", "wstd"}) {
    Detector d = make_detector(name, 3, 4, cfg, 1);
    CHECK(d.boolean != nullptr);
    CHECK(d.rbm == nullptr);
    CHECK_FALSE(is_rbm_detector(name));
  }
  for (const std::string& name : {"rbm", "rbm_rg", "rbm_re", "rrbm"}) {
    Detector d = make_detector(name, 3, 4, cfg, 1);
    CHECK(d.boolean == nullptr);
    CHECK(d.rbm != nullptr);
    CHECK(is_rbm_detector(name));
  }
  CHECK(known_detectors().size() == 9);
  CHECK_THROWS(make_detector("adwin", 3, 4, cfg, 1));
  CHECK_THROWS(make_detector("", 3, 4, cfg, 1));
}

TEST_CASE("factory wires the robust options and batch size") {
  HarnessConfig cfg;
  cfg.batch_size = 10;

  // skewed classes keep the 0-1 losses asymmetric inside each batch, so the
  // reweighted gradient cannot coincide with the plain one
  auto feed = [](RbmDriftDetector& det, std::uint64_t seed, int n) {
    Rng rng(seed);
    int signals = 0;
    for (int i = 0; i < n; ++i) {
      Eigen::Vector2d x(rng.uniform(), rng.uniform());
      if (det.observe(x, i % 10 < 3 ? 1 : 0)) ++signals;
    }
    return signals;
  };

  Detector plain = make_detector("rbm", 2, 2, cfg, 42);
  Detector energy = make_detector("rbm_re", 2, 2, cfg, 42);
  Detector gradient = make_detector("rbm_rg", 2, 2, cfg, 42);
  Detector both = make_detector("rrbm", 2, 2, cfg, 42);

  CHECK(feed(*plain.rbm, 5, 600) == 60);
  CHECK(plain.rbm->batches_seen() == 60);
  feed(*energy.rbm, 5, 600);
  feed(*gradient.rbm, 5, 600);
  feed(*both.rbm, 5, 600);

  // only the robust-energy variants feed the reconstruction noise model
  CHECK_FALSE(plain.rbm->noise().fitted(500));
  CHECK_FALSE(gradient.rbm->noise().fitted(500));
  CHECK(energy.rbm->noise().fitted(500));
  CHECK(both.rbm->noise().fitted(500));

  // the robust-gradient variant reweights updates, so its parameters diverge
  double w_gap = (plain.rbm->params().W - gradient.rbm->params().W).cwiseAbs().maxCoeff();
  CHECK(w_gap > 0.0);
}

TEST_CASE("prequential accuracy windows are exact") {
  ScriptedStream stream(2500, 1);
  HarnessConfig cfg;
  cfg.window = 1000;
  ProtocolLearner learner(2, 2, cfg.learner);
  Detector det;
  det.boolean = std::make_unique<ScriptedDetector>(std::vector<std::int64_t>{});
  RunResult res = prequential_run(stream, learner, det, cfg, -1, true);

  // the empty tree predicts class 0 for the very first instance only
  CHECK(res.instances == 2500);
  CHECK(res.full_windows == 2);
  CHECK(res.mean_accuracy == doctest::Approx((999.0 / 1000.0 + 1.0) / 2.0).epsilon(1e-12));
  REQUIRE(res.window_series.size() == 3);
  CHECK(res.window_series[0].accuracy == doctest::Approx(0.999).epsilon(1e-12));
  CHECK(res.window_series[1].accuracy == 1.0);
  CHECK(res.window_series[2].size == 500);
  CHECK(res.window_series[2].accuracy == 1.0);
  CHECK(res.detections == 0);
  CHECK(res.events.empty());
  CHECK(res.delay == -1);
}

TEST_CASE("short streams fall back to the running accuracy") {
  ScriptedStream stream(300, 0);
  HarnessConfig cfg;
  ProtocolLearner learner(2, 2, cfg.learner);
  Detector det;
  det.boolean = std::make_unique<ScriptedDetector>(std::vector<std::int64_t>{});
  RunResult res = prequential_run(stream, learner, det, cfg);
  CHECK(res.full_windows == 0);
  CHECK(res.mean_accuracy == 1.0);
  CHECK(res.window_series.empty());
}

TEST_CASE("detections split into false alarms and delay") {
  ScriptedStream stream(8000, 0);
  HarnessConfig cfg;
  ProtocolLearner learner(2, 2, cfg.learner);
  Detector det;
  det.boolean = std::make_unique<ScriptedDetector>(std::vector<std::int64_t>{100, 5100, 6200});
  RunResult res = prequential_run(stream, learner, det, cfg, 5000);
  CHECK(res.true_change == 5000);
  CHECK(res.detections == 3);
  CHECK(res.false_alarms == 1);
  CHECK(res.delay == 100);
  REQUIRE(res.events.size() == 3);
  CHECK(res.events[0].index == 100);
  CHECK(res.events[0].level == SignalLevel::Drift);
  CHECK(res.events[1].index == 5100);
}

TEST_CASE("hidden labels bypass detector and learner but not scoring") {
  ScriptedStream stream(1200, 0, false);
  HarnessConfig cfg;
  ProtocolLearner learner(2, 2, cfg.learner);
  auto scripted = std::make_unique<ScriptedDetector>(std::vector<std::int64_t>{10});
  ScriptedDetector* raw = scripted.get();
  Detector det;
  det.boolean = std::move(scripted);
  RunResult res = prequential_run(stream, learner, det, cfg, -1);
  CHECK(raw->steps() == 0);
  CHECK(res.detections == 0);
  CHECK(learner.primary().instances_learned() == 0);
  CHECK(res.mean_accuracy == 1.0);
}

TEST_CASE("prequential run rejects empty streams and bad windows") {
  HarnessConfig cfg;
  ProtocolLearner learner(2, 2, cfg.learner);
  Detector det;
  det.boolean = std::make_unique<ScriptedDetector>(std::vector<std::int64_t>{});
  ScriptedStream empty(0, 0);
  CHECK_THROWS(prequential_run(empty, learner, det, cfg));
  ScriptedStream one(10, 0);
  cfg.window = 0;
  CHECK_THROWS(prequential_run(one, learner, det, cfg));
}

TEST_CASE("the run matrix covers the full grid deterministically") {
  MatrixPlan plan;
  plan.streams.push_back({matrix_sea(3000, "sea_small"), "", "label", 100});
  plan.detectors = {"ecdd", "fhddm"};
  plan.instance_ratios = {0.1, 0.2};
  plan.concept_counts = {1};
  plan.concept_size = 100;
  plan.budgets = {1.0, 0.5};
  plan.repeats = 2;
  plan.master_seed = 99;
  plan.harness.window = 500;

  MatrixResult a = run_matrix(plan);
  // 1 stream x 2 detectors x 2 budgets x 2 repeats x (1 clean + 2 ratios + 1 count)
  REQUIRE(a.runs.size() == 32);
  // rlr: one instance row and one concept row per detector x budget
  REQUIRE(a.rlr.size() == 8);

  CHECK(a.runs[0].detector == "ecdd");
  CHECK(a.runs[0].attack == "none");
  CHECK(a.runs[0].budget == 1.0);
  CHECK(a.runs[0].repeat == 0);
  CHECK(a.runs[1].attack == "instance");
  CHECK(a.runs[1].level == 0.1);
  CHECK(a.runs[3].attack == "concept");
  CHECK(a.runs[3].level == 1.0);
  CHECK(a.runs[3].instances == 3100);
  CHECK(a.runs[0].instances == 3000);

  MatrixResult b = run_matrix(plan);
  REQUIRE(b.runs.size() == a.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].mean_accuracy == b.runs[i].mean_accuracy);
    CHECK(a.runs[i].seed == b.runs[i].seed);
    CHECK(a.runs[i].detections == b.runs[i].detections);
  }
  for (std::size_t i = 0; i < a.rlr.size(); ++i) {
    CHECK(a.rlr[i].rlr_agg == b.rlr[i].rlr_agg);
  }

  // rlr rows recompute from the raw runs
  for (const RlrRow& row : a.rlr) {
    REQUIRE(row.level_values.size() == row.rlr_levels.size());
    for (std::size_t l = 0; l < row.level_values.size(); ++l) {
      double acc = 0.0;
      int found = 0;
      double m0[2] = {0.0, 0.0};
      for (const RunResult& run : a.runs) {
        if (run.stream == row.stream && run.detector == row.detector &&
            run.budget == row.budget && run.attack == "none") {
          m0[run.repeat] = run.mean_accuracy;
        }
      }
      for (const RunResult& run : a.runs) {
        if (run.stream == row.stream && run.detector == row.detector &&
            run.budget == row.budget && run.attack == row.attack &&
            run.level == row.level_values[l]) {
          acc += rlr_level(m0[run.repeat], run.mean_accuracy);
          ++found;
        }
      }
      REQUIRE(found == 2);
      CHECK(row.rlr_levels[l] == doctest::Approx(acc / 2.0).epsilon(1e-12));
    }
    double agg = 0.0;
    for (double v : row.rlr_levels) agg += v / static_cast<double>(row.rlr_levels.size());
    CHECK(row.rlr_agg == doctest::Approx(agg).epsilon(1e-12));
  }
}

TEST_CASE("parallel execution matches single-threaded output") {
  MatrixPlan plan;
  plan.streams.push_back({matrix_sea(2000, "sea_par"), "", "label", 100});
  plan.detectors = {"ecdd", "rddm"};
  plan.instance_ratios = {0.15};
  plan.repeats = 2;
  plan.master_seed = 7;
  plan.harness.window = 500;

  MatrixResult serial = run_matrix(plan);
  plan.jobs = 3;
  MatrixResult parallel = run_matrix(plan);
  REQUIRE(serial.runs.size() == parallel.runs.size());
  for (std::size_t i = 0; i < serial.runs.size(); ++i) {
    CHECK(serial.runs[i].detector == parallel.runs[i].detector);
    CHECK(serial.runs[i].mean_accuracy == parallel.runs[i].mean_accuracy);
    CHECK(serial.runs[i].seed == parallel.runs[i].seed);
  }
}

TEST_CASE("run matrix validation") {
  MatrixPlan plan;
  CHECK_THROWS(run_matrix(plan));
  plan.streams.push_back({matrix_sea(100, "s"), "", "label", 100});
  CHECK_THROWS(run_matrix(plan));
  plan.detectors = {"ecdd"};
  plan.repeats = 0;
  CHECK_THROWS(run_matrix(plan));
  plan.repeats = 1;
  plan.detectors = {"adwin"};
  CHECK_THROWS(run_matrix(plan));
}

TEST_CASE("csv streams run in the matrix but reject concept attacks") {
  StreamSpec src = matrix_sea(200, "csvcase");
  SyntheticStream gen(src);
  std::string path = "eval_test_stream.csv";
  write_stream_csv(gen, path);

  MatrixPlan plan;
  MatrixStream ms;
  ms.spec.name = "csvcase";
  ms.csv_path = path;
  plan.streams.push_back(ms);
  plan.detectors = {"fhddm"};
  plan.repeats = 1;
  plan.harness.window = 100;
  plan.instance_ratios = {0.1};

  MatrixResult res = run_matrix(plan);
  REQUIRE(res.runs.size() == 2);
  CHECK(res.runs[0].instances == 200);
  CHECK(res.runs[1].attack == "instance");

  plan.concept_counts = {1};
  std::vector<RunResult> partial;
  CHECK_THROWS(run_matrix(plan, &partial));
  CHECK(partial.size() >= 1);
  std::remove(path.c_str());
}

TEST_CASE("result csv writers produce one row per entry") {
  RunResult r;
  r.stream = "s1";
  r.detector = "ecdd";
  r.attack = "instance";
  r.level = 0.15;
  r.budget = 0.5;
  r.repeat = 1;
  r.seed = 42;
  r.instances = 1000;
  r.full_windows = 1;
  r.mean_accuracy = 0.875;
  r.detections = 2;
  r.false_alarms = 1;
  r.delay = 30;
  r.true_change = 500;

  std::string path = "eval_test_runs.csv";
  write_runs_csv({r}, path);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "stream,detector,attack,level,budget,repeat,seed,instances,windows,mean_accuracy,"
        "detections,false_alarms,delay,true_change");
  REQUIRE(std::getline(in, line));
  CHECK(line == "s1,ecdd,instance,0.15,0.5,1,42,1000,1,0.875,2,1,30,500");
  CHECK_FALSE(std::getline(in, line));
  in.close();
  std::remove(path.c_str());

  RlrRow row;
  row.stream = "s1";
  row.detector = "ecdd";
  row.attack = "concept";
  row.budget = 1.0;
  row.level_values = {5.0, 10.0};
  row.rlr_levels = {0.125, 0.25};
  row.rlr_agg = 0.1875;
  path = "eval_test_rlr.csv";
  write_rlr_csv({row}, path);
  std::ifstream rin(path);
  REQUIRE(std::getline(rin, line));
  CHECK(line ==
        "stream,detector,attack,budget,level_1,level_2,level_3,level_4,level_5,"
        "rlr_1,rlr_2,rlr_3,rlr_4,rlr_5,rlr_agg");
  REQUIRE(std::getline(rin, line));
  CHECK(line == "s1,ecdd,concept,1,5,10,,,,0.125,0.25,,,,0.1875");
  rin.close();
  std::remove(path.c_str());

  RlrRow wide = row;
  wide.level_values = {1, 2, 3, 4, 5, 6};
  wide.rlr_levels = {0, 0, 0, 0, 0, 0};
  CHECK_THROWS(write_rlr_csv({wide}, path));
  std::remove(path.c_str());
}
