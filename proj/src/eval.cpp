#include "driftlab/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace driftlab {

namespace {

std::string level_tag(const std::string& attack, double level) {
  if (attack == "concept") return std::to_string(static_cast<int>(level));
  std::ostringstream ss;
  ss << level;
  return ss.str();
}

std::string budget_tag(double budget) {
  std::ostringstream ss;
  ss << budget;
  return ss.str();
}

}  // namespace

const std::vector<std::string>& known_detectors() {
  static const std::vector<std::string> names{"eddm", "ecdd",   "fhddm", "rddm", "wstd",
                                              "rbm",  "rbm_rg", "rbm_re", "rrbm"};
  return names;
}

bool is_rbm_detector(const std::string& name) {
  return name == "rbm" || name == "rbm_rg" || name == "rbm_re" || name == "rrbm";
}

Detector make_detector(const std::string& name, int n_features, int n_classes,
                       const HarnessConfig& cfg, std::uint64_t seed) {
  Detector d;
  if (name == "eddm") {
    d.boolean = std::make_unique<Eddm>(cfg.eddm);
  } else if (name == "ecdd") {
    d.boolean = std::make_unique<Ecdd>(cfg.ecdd);
  } else if (name == "fhddm") {
    d.boolean = std::make_unique<Fhddm>(cfg.fhddm);
  } else if (name == "rddm") {
    d.boolean = std::make_unique<Rddm>(cfg.rddm);
  } else if (name == "wstd") {
    d.boolean = std::make_unique<Wstd>(cfg.wstd);
  } else if (is_rbm_detector(name)) {
    RbmDetectorConfig rc = cfg.rbm;
    rc.batch_size = cfg.batch_size;
    rc.robust.use_robust_gradient = name == "rbm_rg" || name == "rrbm";
    rc.robust.use_robust_energy = name == "rbm_re" || name == "rrbm";
    d.rbm = std::make_unique<RbmDriftDetector>(n_features, n_classes, rc, seed);
  } else {
    throw std::invalid_argument("unknown detector: " + name);
  }
  return d;
}

RunResult prequential_run(StreamSource& stream, ProtocolLearner& learner, Detector& detector,
                          const HarnessConfig& cfg, std::int64_t true_change,
                          bool keep_window_series) {
  if (cfg.window < 1) throw std::invalid_argument("prequential_run: window must be >= 1");
  RunResult res;
  res.true_change = true_change;
  const auto t0 = std::chrono::steady_clock::now();

  Instance inst;
  std::int64_t i = 0;
  std::int64_t in_window = 0;
  std::int64_t correct_window = 0;
  double acc_sum = 0.0;
  while (stream.next(&inst)) {
    int pred = learner.predict(inst.x);
    bool correct = pred == inst.label;
    ++in_window;
    correct_window += correct ? 1 : 0;
    if (in_window == cfg.window) {
      double acc = static_cast<double>(correct_window) / static_cast<double>(cfg.window);
      if (keep_window_series) res.window_series.push_back({res.full_windows, acc, cfg.window});
      acc_sum += acc;
      ++res.full_windows;
      in_window = 0;
      correct_window = 0;
    }

    SignalLevel sig = SignalLevel::Stable;
    bool have_sig = false;
    if (detector.boolean) {
      if (inst.label_visible) {
        sig = detector.boolean->step(correct);
        have_sig = true;
      }
    } else {
      auto s = detector.rbm->observe(inst.x, inst.label_visible ? inst.label : kNoLabel);
      if (s) {
        sig = s->level;
        have_sig = true;
      }
    }
    if (have_sig) {
      if (sig != SignalLevel::Stable) res.events.push_back({i, sig});
      if (sig == SignalLevel::Drift) {
        ++res.detections;
        if (true_change < 0 || i < true_change) {
          ++res.false_alarms;
        } else if (res.delay < 0) {
          res.delay = i - true_change;
        }
      }
      learner.drift_protocol(sig);
    }

    if (inst.label_visible && inst.label != kNoLabel) learner.learn(inst.x, inst.label);
    ++i;
  }
  if (i == 0) throw std::runtime_error("prequential_run: empty stream");
  if (in_window > 0 && keep_window_series) {
    res.window_series.push_back(
        {res.full_windows, static_cast<double>(correct_window) / in_window, in_window});
  }
  res.instances = i;
  res.mean_accuracy = res.full_windows > 0
                          ? acc_sum / static_cast<double>(res.full_windows)
                          : static_cast<double>(correct_window) / static_cast<double>(i);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

double rlr_level(double m0, double ml) {
  if (!(m0 > 0.0)) throw std::invalid_argument("rlr_level: clean metric must be positive");
  return (m0 - ml) / m0;
}

double rlr_aggregate(const std::vector<double>& rlr_levels, const std::vector<double>& weights,
                     bool strict_formula) {
  if (rlr_levels.size() != weights.size()) {
    throw std::invalid_argument("rlr_aggregate: levels and weights differ in length");
  }
  if (rlr_levels.empty()) throw std::invalid_argument("rlr_aggregate: no levels");
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("rlr_aggregate: negative weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) {
    throw std::invalid_argument("rlr_aggregate: weights must sum to 1");
  }
  double acc = 0.0;
  for (std::size_t l = 0; l < rlr_levels.size(); ++l) acc += weights[l] * rlr_levels[l];
  return strict_formula ? acc / static_cast<double>(rlr_levels.size()) : acc;
}

namespace {

struct RunJob {
  int stream_idx = 0;
  std::string detector;
  std::string attack = "none";
  double level = 0.0;
  double budget = 1.0;
  int repeat = 0;
};

RunStream build_run_stream(const MatrixStream& ms, const AttackPlan& ap, const LabelBudget& lb,
                           std::uint64_t attack_seed, std::uint64_t budget_seed) {
  if (ms.csv_path.empty()) {
    return make_attacked_stream(ms.spec, ap, lb, attack_seed, budget_seed);
  }
  if (ap.kind == AttackKind::concept_based && ap.concept_count > 0) {
    throw std::invalid_argument("concept attacks need a synthetic stream: " + ms.spec.name);
  }
  RunStream run;
  std::unique_ptr<StreamSource> src =
      std::make_unique<CsvStream>(ms.csv_path, CsvSchema{ms.label_column, ms.max_malformed});
  if (ap.kind == AttackKind::instance_based && ap.instance_ratio > 0.0) {
    src = std::make_unique<FlipLabels>(std::move(src), ap.instance_ratio,
                                       derive_seed(attack_seed, "flip"));
  }
  if (lb.fraction < 1.0) {
    src = std::make_unique<SparsifyLabels>(std::move(src), lb.fraction, budget_seed);
  }
  run.source = std::move(src);
  return run;
}

RunResult execute_run(const RunJob& job, const MatrixPlan& plan) {
  MatrixStream ms = plan.streams[job.stream_idx];
  const std::string& name = ms.spec.name;
  ms.spec.seed =
      derive_seed(plan.master_seed, "stream|" + name + "|rep" + std::to_string(job.repeat));

  AttackPlan ap;
  if (job.attack == "instance") {
    ap.kind = AttackKind::instance_based;
    ap.instance_ratio = job.level;
  } else if (job.attack == "concept") {
    ap.kind = AttackKind::concept_based;
    ap.concept_count = static_cast<int>(job.level);
    ap.concept_size = plan.concept_size;
  }
  const std::string lt = level_tag(job.attack, job.level);
  const std::uint64_t attack_seed =
      derive_seed(plan.master_seed, "attack|" + name + "|" + job.attack + "|" + lt + "|rep" +
                                        std::to_string(job.repeat));
  const std::uint64_t budget_seed =
      derive_seed(plan.master_seed,
                  "budget|" + name + "|" + budget_tag(job.budget) + "|rep" +
                      std::to_string(job.repeat));
  const std::uint64_t run_seed =
      derive_seed(plan.master_seed, name + "|" + job.detector + "|" + job.attack + "|" + lt +
                                        "|" + budget_tag(job.budget) + "|rep" +
                                        std::to_string(job.repeat));

  RunStream rs = build_run_stream(ms, ap, LabelBudget{job.budget}, attack_seed, budget_seed);
  Detector det = make_detector(job.detector, rs.source->n_features(), rs.source->n_classes(),
                               plan.harness, run_seed);
  ProtocolLearner learner(rs.source->n_features(), rs.source->n_classes(), plan.harness.learner);
  RunResult res = prequential_run(*rs.source, learner, det, plan.harness, rs.true_change);
  res.stream = name;
  res.detector = job.detector;
  res.attack = job.attack;
  res.level = job.level;
  res.budget = job.budget;
  res.repeat = job.repeat;
  res.seed = run_seed;
  return res;
}

}  // namespace

MatrixResult run_matrix(const MatrixPlan& plan, std::vector<RunResult>* partial_sink) {
  if (plan.streams.empty()) throw std::invalid_argument("run_matrix: no streams");
  if (plan.detectors.empty()) throw std::invalid_argument("run_matrix: no detectors");
  if (plan.repeats < 1) throw std::invalid_argument("run_matrix: repeats must be >= 1");
  for (const std::string& d : plan.detectors) {
    const auto& known = known_detectors();
    if (std::find(known.begin(), known.end(), d) == known.end()) {
      throw std::invalid_argument("run_matrix: unknown detector: " + d);
    }
  }

  std::vector<RunJob> jobs;
  for (int s = 0; s < static_cast<int>(plan.streams.size()); ++s) {
    for (const std::string& d : plan.detectors) {
      for (double b : plan.budgets) {
        for (int r = 0; r < plan.repeats; ++r) {
          jobs.push_back({s, d, "none", 0.0, b, r});
          for (double ratio : plan.instance_ratios) jobs.push_back({s, d, "instance", ratio, b, r});
          for (int count : plan.concept_counts) {
            jobs.push_back({s, d, "concept", static_cast<double>(count), b, r});
          }
        }
      }
    }
  }

  MatrixResult out;
  out.runs.resize(jobs.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      std::size_t idx = cursor.fetch_add(1);
      if (idx >= jobs.size()) return;
      try {
        out.runs[idx] = execute_run(jobs[idx], plan);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  int n_threads = std::max(1, plan.jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) {
    if (partial_sink) {
      for (const RunResult& r : out.runs) {
        if (r.instances > 0) partial_sink->push_back(r);
      }
    }
    std::rethrow_exception(first_error);
  }

  // RLR per (stream, detector, attack kind, budget): pair each attacked run
  // with the clean run of the same repeat, average the per-level values over
  // repeats, then aggregate across levels.
  for (int s = 0; s < static_cast<int>(plan.streams.size()); ++s) {
    for (const std::string& d : plan.detectors) {
      for (double b : plan.budgets) {
        std::vector<double> m0(plan.repeats, 0.0);
        for (const RunResult& run : out.runs) {
          if (run.stream == plan.streams[s].spec.name && run.detector == d && run.budget == b &&
              run.attack == "none") {
            m0[run.repeat] = run.mean_accuracy;
          }
        }
        auto build_rows = [&](const std::string& attack, const std::vector<double>& levels) {
          if (levels.empty()) return;
          RlrRow row;
          row.stream = plan.streams[s].spec.name;
          row.detector = d;
          row.attack = attack;
          row.budget = b;
          row.level_values = levels;
          for (double lv : levels) {
            double acc = 0.0;
            int found = 0;
            for (const RunResult& run : out.runs) {
              if (run.stream == row.stream && run.detector == d && run.budget == b &&
                  run.attack == attack && run.level == lv) {
                acc += rlr_level(m0[run.repeat], run.mean_accuracy);
                ++found;
              }
            }
            if (found != plan.repeats) throw std::logic_error("run_matrix: missing runs for rlr");
            row.rlr_levels.push_back(acc / found);
          }
          std::vector<double> weights = plan.rlr_weights;
          if (weights.empty()) {
            weights.assign(levels.size(), 1.0 / static_cast<double>(levels.size()));
          }
          row.rlr_agg = rlr_aggregate(row.rlr_levels, weights, plan.rlr_strict);
          out.rlr.push_back(std::move(row));
        };
        build_rows("instance", plan.instance_ratios);
        std::vector<double> counts;
        for (int c : plan.concept_counts) counts.push_back(static_cast<double>(c));
        build_rows("concept", counts);
      }
    }
  }
  return out;
}

void write_runs_csv(const std::vector<RunResult>& runs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "stream,detector,attack,level,budget,repeat,seed,instances,windows,mean_accuracy,"
         "detections,false_alarms,delay,true_change\n";
  for (const RunResult& r : runs) {
    out << r.stream << ',' << r.detector << ',' << r.attack << ',' << level_tag(r.attack, r.level)
        << ',' << budget_tag(r.budget) << ',' << r.repeat << ',' << r.seed << ',' << r.instances
        << ',' << r.full_windows << ',' << std::setprecision(12) << r.mean_accuracy << ','
        << r.detections << ',' << r.false_alarms << ',' << r.delay << ',' << r.true_change
        << '\n';
  }
}

void write_runs_meta_csv(const std::vector<RunResult>& runs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "stream,detector,attack,level,budget,repeat,wall_seconds\n";
  for (const RunResult& r : runs) {
    out << r.stream << ',' << r.detector << ',' << r.attack << ',' << level_tag(r.attack, r.level)
        << ',' << budget_tag(r.budget) << ',' << r.repeat << ',' << std::setprecision(6)
        << r.wall_seconds << '\n';
  }
}

void write_rlr_csv(const std::vector<RlrRow>& rows, const std::string& path) {
  constexpr int kMaxLevels = 5;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "stream,detector,attack,budget";
  for (int l = 1; l <= kMaxLevels; ++l) out << ",level_" << l;
  for (int l = 1; l <= kMaxLevels; ++l) out << ",rlr_" << l;
  out << ",rlr_agg\n";
  for (const RlrRow& row : rows) {
    if (static_cast<int>(row.level_values.size()) > kMaxLevels) {
      throw std::runtime_error("rlr csv supports at most five attack levels per row");
    }
    out << row.stream << ',' << row.detector << ',' << row.attack << ','
        << budget_tag(row.budget);
    for (int l = 0; l < kMaxLevels; ++l) {
      out << ',';
      if (l < static_cast<int>(row.level_values.size())) {
        out << level_tag(row.attack, row.level_values[l]);
      }
    }
    out << std::setprecision(12);
    for (int l = 0; l < kMaxLevels; ++l) {
      out << ',';
      if (l < static_cast<int>(row.rlr_levels.size())) out << row.rlr_levels[l];
    }
    out << ',' << row.rlr_agg << '\n';
  }
}

}  // namespace driftlab
