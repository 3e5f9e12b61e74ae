#include "driftlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace driftlab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ConfigError("config error at " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown field");
  }
}

double get_number(const json& obj, const std::string& key, const std::string& path, double dflt) {
  if (!obj.contains(key)) return dflt;
  if (!obj[key].is_number()) fail(path + "." + key, "expected a number");
  return obj[key].get<double>();
}

std::int64_t get_int(const json& obj, const std::string& key, const std::string& path,
                     std::int64_t dflt) {
  if (!obj.contains(key)) return dflt;
  if (!obj[key].is_number_integer()) fail(path + "." + key, "expected an integer");
  return obj[key].get<std::int64_t>();
}

bool get_bool(const json& obj, const std::string& key, const std::string& path, bool dflt) {
  if (!obj.contains(key)) return dflt;
  if (!obj[key].is_boolean()) fail(path + "." + key, "expected a boolean");
  return obj[key].get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& path,
                       const std::string& dflt) {
  if (!obj.contains(key)) return dflt;
  if (!obj[key].is_string()) fail(path + "." + key, "expected a string");
  return obj[key].get<std::string>();
}

bool in_grid(double v, const std::vector<double>& grid) {
  for (double g : grid) {
    if (std::abs(v - g) <= 1e-12) return true;
  }
  return false;
}

std::string csv_stem(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

void parse_rbm_section(const json& obj, const std::string& path, RbmDetectorConfig* rbm) {
  check_keys(obj, path,
             {"hidden_ratio", "eta", "k", "weight_sigma", "w_max", "delta_w", "lag", "alpha",
              "seg_cap", "robust_delta", "rho", "chi", "gate_min_instances",
              "gate_exclude_frac"});
  rbm->hidden_ratio = get_number(obj, "hidden_ratio", path, rbm->hidden_ratio);
  rbm->eta = get_number(obj, "eta", path, rbm->eta);
  rbm->k = static_cast<int>(get_int(obj, "k", path, rbm->k));
  rbm->weight_sigma = get_number(obj, "weight_sigma", path, rbm->weight_sigma);
  rbm->w_max = static_cast<int>(get_int(obj, "w_max", path, rbm->w_max));
  rbm->delta_w = get_number(obj, "delta_w", path, rbm->delta_w);
  rbm->lag = static_cast<int>(get_int(obj, "lag", path, rbm->lag));
  rbm->alpha = get_number(obj, "alpha", path, rbm->alpha);
  rbm->seg_cap = static_cast<int>(get_int(obj, "seg_cap", path, rbm->seg_cap));
  rbm->robust.delta = get_number(obj, "robust_delta", path, rbm->robust.delta);
  std::string rho = get_string(obj, "rho", path,
                               rbm->robust.rho_kind == RhoKind::quadratic ? "quadratic"
                                                                          : "pseudo_huber");
  if (rho == "pseudo_huber") {
    rbm->robust.rho_kind = RhoKind::pseudo_huber;
  } else if (rho == "quadratic") {
    rbm->robust.rho_kind = RhoKind::quadratic;
  } else {
    fail(path + ".rho", "expected pseudo_huber or quadratic");
  }
  std::string chi = get_string(obj, "chi", path,
                               rbm->robust.chi_kind == ChiKind::quadratic ? "quadratic"
                                                                          : "bounded");
  if (chi == "bounded") {
    rbm->robust.chi_kind = ChiKind::bounded;
  } else if (chi == "quadratic") {
    rbm->robust.chi_kind = ChiKind::quadratic;
  } else {
    fail(path + ".chi", "expected bounded or quadratic");
  }
  rbm->robust.gate_min_instances =
      static_cast<int>(get_int(obj, "gate_min_instances", path, rbm->robust.gate_min_instances));
  rbm->robust.gate_exclude_frac =
      get_number(obj, "gate_exclude_frac", path, rbm->robust.gate_exclude_frac);
}

void parse_learner_section(const json& obj, const std::string& path, ProtocolConfig* lc) {
  check_keys(obj, path,
             {"grace_period", "split_confidence", "tie_threshold", "bins", "max_nodes",
              "max_depth", "stale_timeout"});
  lc->tree.grace_period = static_cast<int>(get_int(obj, "grace_period", path, lc->tree.grace_period));
  lc->tree.split_confidence = get_number(obj, "split_confidence", path, lc->tree.split_confidence);
  lc->tree.tie_threshold = get_number(obj, "tie_threshold", path, lc->tree.tie_threshold);
  lc->tree.bins = static_cast<int>(get_int(obj, "bins", path, lc->tree.bins));
  lc->tree.max_nodes = static_cast<int>(get_int(obj, "max_nodes", path, lc->tree.max_nodes));
  lc->tree.max_depth = static_cast<int>(get_int(obj, "max_depth", path, lc->tree.max_depth));
  lc->stale_timeout = get_int(obj, "stale_timeout", path, lc->stale_timeout);
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config error at <root>: not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config error at <root>: expected a JSON object");
  check_keys(root, "<root>",
             {"streams", "length_scale", "detectors", "attacks", "budgets", "repeats",
              "master_seed", "out_dir", "rlr", "jobs", "window", "batch_size",
              "allow_custom_levels", "rbm", "learner", "eddm", "ecdd", "fhddm", "rddm", "wstd"});

  ExperimentConfig cfg;

  if (!root.contains("streams") || !root["streams"].is_array() || root["streams"].empty()) {
    fail("streams", "expected a non-empty array of stream entries");
  }
  int si = 0;
  for (const json& entry : root["streams"]) {
    std::string path = "streams[" + std::to_string(si++) + "]";
    ExperimentConfig::StreamEntry se;
    if (entry.is_string()) {
      se.benchmark = entry.get<std::string>();
      se.name = se.benchmark;
    } else if (entry.is_object()) {
      check_keys(entry, path, {"benchmark", "csv", "name", "label_column", "max_malformed"});
      se.benchmark = get_string(entry, "benchmark", path, "");
      se.csv = get_string(entry, "csv", path, "");
      if (se.benchmark.empty() == se.csv.empty()) {
        fail(path, "exactly one of 'benchmark' or 'csv' is required");
      }
      se.name = get_string(entry, "name", path,
                           se.benchmark.empty() ? csv_stem(se.csv) : se.benchmark);
      se.label_column = get_string(entry, "label_column", path, se.label_column);
      se.max_malformed =
          static_cast<int>(get_int(entry, "max_malformed", path, se.max_malformed));
    } else {
      fail(path, "expected a benchmark name or a stream object");
    }
    cfg.streams.push_back(std::move(se));
  }

  cfg.length_scale = get_number(root, "length_scale", "<root>", cfg.length_scale);
  if (!(cfg.length_scale > 0.0 && cfg.length_scale <= 1.0)) {
    fail("length_scale", "must be in (0, 1]");
  }

  if (root.contains("detectors")) {
    if (!root["detectors"].is_array()) fail("detectors", "expected an array of names");
    for (const json& d : root["detectors"]) {
      if (!d.is_string()) fail("detectors", "expected strings");
      cfg.detectors.push_back(d.get<std::string>());
    }
  } else {
    cfg.detectors = known_detectors();
  }
  for (std::size_t i = 0; i < cfg.detectors.size(); ++i) {
    const auto& known = known_detectors();
    if (std::find(known.begin(), known.end(), cfg.detectors[i]) == known.end()) {
      fail("detectors[" + std::to_string(i) + "]", "unknown detector '" + cfg.detectors[i] + "'");
    }
  }

  cfg.allow_custom_levels = get_bool(root, "allow_custom_levels", "<root>", false);

  if (root.contains("attacks")) {
    const json& atk = root["attacks"];
    if (!atk.is_object()) fail("attacks", "expected an object");
    check_keys(atk, "attacks", {"instance_ratios", "concept_counts", "concept_size"});
    if (atk.contains("instance_ratios")) {
      if (!atk["instance_ratios"].is_array()) fail("attacks.instance_ratios", "expected an array");
      int i = 0;
      for (const json& v : atk["instance_ratios"]) {
        std::string path = "attacks.instance_ratios[" + std::to_string(i++) + "]";
        if (!v.is_number()) fail(path, "expected a number");
        double r = v.get<double>();
        if (!cfg.allow_custom_levels && !in_grid(r, {0.05, 0.10, 0.15, 0.20, 0.25})) {
          fail(path, "outside the documented grid; set allow_custom_levels to override");
        }
        if (!(r > 0.0 && r <= 1.0)) fail(path, "must be in (0, 1]");
        cfg.instance_ratios.push_back(r);
      }
    }
    if (atk.contains("concept_counts")) {
      if (!atk["concept_counts"].is_array()) fail("attacks.concept_counts", "expected an array");
      int i = 0;
      for (const json& v : atk["concept_counts"]) {
        std::string path = "attacks.concept_counts[" + std::to_string(i++) + "]";
        if (!v.is_number_integer()) fail(path, "expected an integer");
        int c = v.get<int>();
        if (!cfg.allow_custom_levels &&
            !in_grid(static_cast<double>(c), {10, 30, 50, 70, 100})) {
          fail(path, "outside the documented grid; set allow_custom_levels to override");
        }
        if (c < 1) fail(path, "must be >= 1");
        cfg.concept_counts.push_back(c);
      }
    }
    cfg.concept_size = static_cast<int>(get_int(atk, "concept_size", "attacks", cfg.concept_size));
    if (cfg.concept_size < 1) fail("attacks.concept_size", "must be >= 1");
  }

  if (root.contains("budgets")) {
    if (!root["budgets"].is_array()) fail("budgets", "expected an array");
    cfg.budgets.clear();
    int i = 0;
    for (const json& v : root["budgets"]) {
      std::string path = "budgets[" + std::to_string(i++) + "]";
      if (!v.is_number()) fail(path, "expected a number");
      double b = v.get<double>();
      if (!cfg.allow_custom_levels &&
          !in_grid(b, {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 1.0})) {
        fail(path, "outside the documented grid; set allow_custom_levels to override");
      }
      if (!(b > 0.0 && b <= 1.0)) fail(path, "must be in (0, 1]");
      cfg.budgets.push_back(b);
    }
    if (cfg.budgets.empty()) fail("budgets", "expected a non-empty array");
  }

  cfg.repeats = static_cast<int>(get_int(root, "repeats", "<root>", cfg.repeats));
  if (cfg.repeats < 1) fail("repeats", "must be >= 1");

  if (!root.contains("master_seed")) {
    fail("master_seed", "required for reproducibility");
  }
  const json& seed = root["master_seed"];
  if (!seed.is_number_integer() ||
      (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
    fail("master_seed", "expected a nonnegative integer");
  }
  cfg.master_seed = seed.get<std::uint64_t>();

  cfg.out_dir = get_string(root, "out_dir", "<root>", cfg.out_dir);
  cfg.jobs = static_cast<int>(get_int(root, "jobs", "<root>", cfg.jobs));
  if (cfg.jobs < 1) fail("jobs", "must be >= 1");

  if (root.contains("rlr")) {
    const json& rlr = root["rlr"];
    if (!rlr.is_object()) fail("rlr", "expected an object");
    check_keys(rlr, "rlr", {"weights", "strict"});
    cfg.rlr_strict = get_bool(rlr, "strict", "rlr", false);
    if (rlr.contains("weights")) {
      if (rlr["weights"].is_string()) {
        if (rlr["weights"].get<std::string>() != "equal") {
          fail("rlr.weights", "expected 'equal' or an array of weights");
        }
      } else if (rlr["weights"].is_array()) {
        for (const json& w : rlr["weights"]) {
          if (!w.is_number()) fail("rlr.weights", "expected numbers");
          cfg.rlr_weights.push_back(w.get<double>());
        }
      } else {
        fail("rlr.weights", "expected 'equal' or an array of weights");
      }
    }
  }

  cfg.harness.window = get_int(root, "window", "<root>", cfg.harness.window);
  if (cfg.harness.window < 1) fail("window", "must be >= 1");
  cfg.harness.batch_size =
      static_cast<int>(get_int(root, "batch_size", "<root>", cfg.harness.batch_size));
  if (cfg.harness.batch_size < 2) fail("batch_size", "must be >= 2");

  if (root.contains("rbm")) {
    if (!root["rbm"].is_object()) fail("rbm", "expected an object");
    parse_rbm_section(root["rbm"], "rbm", &cfg.harness.rbm);
  }
  if (root.contains("learner")) {
    if (!root["learner"].is_object()) fail("learner", "expected an object");
    parse_learner_section(root["learner"], "learner", &cfg.harness.learner);
  }
  if (root.contains("eddm")) {
    const json& o = root["eddm"];
    if (!o.is_object()) fail("eddm", "expected an object");
    check_keys(o, "eddm", {"alpha_w", "alpha_d", "min_errors"});
    cfg.harness.eddm.alpha_w = get_number(o, "alpha_w", "eddm", cfg.harness.eddm.alpha_w);
    cfg.harness.eddm.alpha_d = get_number(o, "alpha_d", "eddm", cfg.harness.eddm.alpha_d);
    cfg.harness.eddm.min_errors =
        static_cast<int>(get_int(o, "min_errors", "eddm", cfg.harness.eddm.min_errors));
  }
  if (root.contains("ecdd")) {
    const json& o = root["ecdd"];
    if (!o.is_object()) fail("ecdd", "expected an object");
    check_keys(o, "ecdd", {"lambda", "min_errors", "l_warn", "l_drift"});
    cfg.harness.ecdd.lambda = get_number(o, "lambda", "ecdd", cfg.harness.ecdd.lambda);
    cfg.harness.ecdd.min_errors =
        static_cast<int>(get_int(o, "min_errors", "ecdd", cfg.harness.ecdd.min_errors));
    cfg.harness.ecdd.l_warn = get_number(o, "l_warn", "ecdd", cfg.harness.ecdd.l_warn);
    cfg.harness.ecdd.l_drift = get_number(o, "l_drift", "ecdd", cfg.harness.ecdd.l_drift);
  }
  if (root.contains("fhddm")) {
    const json& o = root["fhddm"];
    if (!o.is_object()) fail("fhddm", "expected an object");
    check_keys(o, "fhddm", {"window", "delta"});
    cfg.harness.fhddm.window =
        static_cast<int>(get_int(o, "window", "fhddm", cfg.harness.fhddm.window));
    cfg.harness.fhddm.delta = get_number(o, "delta", "fhddm", cfg.harness.fhddm.delta);
  }
  if (root.contains("rddm")) {
    const json& o = root["rddm"];
    if (!o.is_object()) fail("rddm", "expected an object");
    check_keys(o, "rddm",
               {"alpha_w", "alpha_d", "min_errors", "min_instances", "max_instances",
                "warn_limit"});
    cfg.harness.rddm.alpha_w = get_number(o, "alpha_w", "rddm", cfg.harness.rddm.alpha_w);
    cfg.harness.rddm.alpha_d = get_number(o, "alpha_d", "rddm", cfg.harness.rddm.alpha_d);
    cfg.harness.rddm.min_errors =
        static_cast<int>(get_int(o, "min_errors", "rddm", cfg.harness.rddm.min_errors));
    cfg.harness.rddm.min_instances =
        static_cast<int>(get_int(o, "min_instances", "rddm", cfg.harness.rddm.min_instances));
    cfg.harness.rddm.max_instances =
        static_cast<int>(get_int(o, "max_instances", "rddm", cfg.harness.rddm.max_instances));
    cfg.harness.rddm.warn_limit =
        static_cast<int>(get_int(o, "warn_limit", "rddm", cfg.harness.rddm.warn_limit));
  }
  if (root.contains("wstd")) {
    const json& o = root["wstd"];
    if (!o.is_object()) fail("wstd", "expected an object");
    check_keys(o, "wstd", {"window", "alpha_w", "alpha_d", "max_old"});
    cfg.harness.wstd.window =
        static_cast<int>(get_int(o, "window", "wstd", cfg.harness.wstd.window));
    cfg.harness.wstd.alpha_w = get_number(o, "alpha_w", "wstd", cfg.harness.wstd.alpha_w);
    cfg.harness.wstd.alpha_d = get_number(o, "alpha_d", "wstd", cfg.harness.wstd.alpha_d);
    cfg.harness.wstd.max_old =
        static_cast<int>(get_int(o, "max_old", "wstd", cfg.harness.wstd.max_old));
  }

  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config error at <root>: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

void apply_overrides(ExperimentConfig& cfg, const CliOverrides& overrides) {
  if (overrides.has_seed) cfg.master_seed = overrides.seed;
  if (overrides.has_scale) cfg.length_scale = overrides.scale;
  if (overrides.has_jobs) cfg.jobs = overrides.jobs;
  if (!overrides.out_dir.empty()) cfg.out_dir = overrides.out_dir;
}

MatrixPlan build_matrix_plan(const ExperimentConfig& cfg) {
  MatrixPlan plan;
  for (std::size_t i = 0; i < cfg.streams.size(); ++i) {
    const auto& se = cfg.streams[i];
    MatrixStream ms;
    if (!se.benchmark.empty()) {
      try {
        ms.spec = make_benchmark(se.benchmark, cfg.length_scale);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("config error at streams[" + std::to_string(i) + "].benchmark: " +
                          e.what());
      }
      ms.spec.name = se.name;
    } else {
      if (!cfg.concept_counts.empty()) {
        throw ConfigError("config error at streams[" + std::to_string(i) +
                          "].csv: concept attacks need a synthetic stream");
      }
      ms.spec.name = se.name;
      ms.csv_path = se.csv;
      ms.label_column = se.label_column;
      ms.max_malformed = se.max_malformed;
    }
    plan.streams.push_back(std::move(ms));
  }
  plan.detectors = cfg.detectors;
  plan.instance_ratios = cfg.instance_ratios;
  plan.concept_counts = cfg.concept_counts;
  plan.concept_size = cfg.concept_size;
  plan.budgets = cfg.budgets;
  plan.repeats = cfg.repeats;
  plan.master_seed = cfg.master_seed;
  plan.rlr_weights = cfg.rlr_weights;
  plan.rlr_strict = cfg.rlr_strict;
  plan.jobs = cfg.jobs;
  plan.harness = cfg.harness;
  return plan;
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
  json root;
  json streams = json::array();
  for (const auto& se : cfg.streams) {
    json e;
    if (!se.benchmark.empty()) {
      e["benchmark"] = se.benchmark;
    } else {
      e["csv"] = se.csv;
      e["label_column"] = se.label_column;
      e["max_malformed"] = se.max_malformed;
    }
    e["name"] = se.name;
    streams.push_back(e);
  }
  root["streams"] = streams;
  root["length_scale"] = cfg.length_scale;
  root["detectors"] = cfg.detectors;
  root["attacks"] = {{"instance_ratios", cfg.instance_ratios},
                     {"concept_counts", cfg.concept_counts},
                     {"concept_size", cfg.concept_size}};
  root["budgets"] = cfg.budgets;
  root["repeats"] = cfg.repeats;
  root["master_seed"] = cfg.master_seed;
  root["out_dir"] = cfg.out_dir;
  root["allow_custom_levels"] = cfg.allow_custom_levels;
  root["jobs"] = cfg.jobs;
  root["window"] = cfg.harness.window;
  root["batch_size"] = cfg.harness.batch_size;
  if (cfg.rlr_weights.empty()) {
    root["rlr"] = {{"weights", "equal"}, {"strict", cfg.rlr_strict}};
  } else {
    root["rlr"] = {{"weights", cfg.rlr_weights}, {"strict", cfg.rlr_strict}};
  }
  const RbmDetectorConfig& r = cfg.harness.rbm;
  root["rbm"] = {{"hidden_ratio", r.hidden_ratio},
                 {"eta", r.eta},
                 {"k", r.k},
                 {"weight_sigma", r.weight_sigma},
                 {"w_max", r.w_max},
                 {"delta_w", r.delta_w},
                 {"lag", r.lag},
                 {"alpha", r.alpha},
                 {"seg_cap", r.seg_cap},
                 {"robust_delta", r.robust.delta},
                 {"rho", r.robust.rho_kind == RhoKind::quadratic ? "quadratic" : "pseudo_huber"},
                 {"chi", r.robust.chi_kind == ChiKind::quadratic ? "quadratic" : "bounded"},
                 {"gate_min_instances", r.robust.gate_min_instances},
                 {"gate_exclude_frac", r.robust.gate_exclude_frac}};
  const ProtocolConfig& l = cfg.harness.learner;
  root["learner"] = {{"grace_period", l.tree.grace_period},
                     {"split_confidence", l.tree.split_confidence},
                     {"tie_threshold", l.tree.tie_threshold},
                     {"bins", l.tree.bins},
                     {"max_nodes", l.tree.max_nodes},
                     {"max_depth", l.tree.max_depth},
                     {"stale_timeout", l.stale_timeout}};
  root["eddm"] = {{"alpha_w", cfg.harness.eddm.alpha_w},
                  {"alpha_d", cfg.harness.eddm.alpha_d},
                  {"min_errors", cfg.harness.eddm.min_errors}};
  root["ecdd"] = {{"lambda", cfg.harness.ecdd.lambda},
                  {"min_errors", cfg.harness.ecdd.min_errors},
                  {"l_warn", cfg.harness.ecdd.l_warn},
                  {"l_drift", cfg.harness.ecdd.l_drift}};
  root["fhddm"] = {{"window", cfg.harness.fhddm.window}, {"delta", cfg.harness.fhddm.delta}};
  root["rddm"] = {{"alpha_w", cfg.harness.rddm.alpha_w},
                  {"alpha_d", cfg.harness.rddm.alpha_d},
                  {"min_errors", cfg.harness.rddm.min_errors},
                  {"min_instances", cfg.harness.rddm.min_instances},
                  {"max_instances", cfg.harness.rddm.max_instances},
                  {"warn_limit", cfg.harness.rddm.warn_limit}};
  root["wstd"] = {{"window", cfg.harness.wstd.window},
                  {"alpha_w", cfg.harness.wstd.alpha_w},
                  {"alpha_d", cfg.harness.wstd.alpha_d},
                  {"max_old", cfg.harness.wstd.max_old}};
  return root.dump(2) + "\n";
}

}  // namespace driftlab
