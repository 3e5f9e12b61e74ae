#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftlab/attacks.hpp"
#include "driftlab/config.hpp"
#include "driftlab/eval.hpp"
#include "driftlab/streams.hpp"

namespace fs = std::filesystem;
using namespace driftlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

void atomic_write(const std::string& path, const std::string& body) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << body;
  }
  fs::rename(tmp, path);
}

int cmd_generate(const std::string& benchmark, double scale, std::uint64_t seed,
                 const std::string& out_path, double flip, int inject, int concept_size,
                 double budget) {
  StreamSpec spec;
  try {
    spec = make_benchmark(benchmark, scale);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  spec.seed = seed;

  AttackPlan plan;
  if (flip > 0.0 && inject > 0) {
    std::cerr << "error: --flip and --inject are mutually exclusive\n";
    return kExitConfig;
  }
  if (flip > 0.0) {
    plan.kind = AttackKind::instance_based;
    plan.instance_ratio = flip;
  } else if (inject > 0) {
    plan.kind = AttackKind::concept_based;
    plan.concept_count = inject;
    plan.concept_size = concept_size;
  }

  try {
    AttackAudit audit;
    RunStream rs = make_attacked_stream(spec, plan, LabelBudget{budget},
                                        derive_seed(seed, "attack"), derive_seed(seed, "budget"),
                                        &audit);
    write_stream_csv(*rs.source, out_path);
    write_audit_csv(audit, out_path + ".audit.csv");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::cout << "wrote " << out_path << " and " << out_path << ".audit.csv\n";
  return kExitOk;
}

int cmd_run(const std::string& config_path, const CliOverrides& overrides) {
  ExperimentConfig cfg;
  MatrixPlan plan;
  try {
    cfg = load_experiment_config(config_path);
    apply_overrides(cfg, overrides);
    plan = build_matrix_plan(cfg);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  try {
    fs::create_directories(cfg.out_dir);
    atomic_write((fs::path(cfg.out_dir) / "resolved_config.json").string(),
                 resolved_config_json(cfg));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  std::vector<RunResult> partial;
  MatrixResult result;
  try {
    result = run_matrix(plan, &partial);
  } catch (const std::exception& e) {
    try {
      write_runs_csv(partial, (fs::path(cfg.out_dir) / "runs.csv").string());
      nlohmann::json manifest{{"error", e.what()}, {"completed_runs", partial.size()}};
      atomic_write((fs::path(cfg.out_dir) / "failure_manifest.json").string(),
                   manifest.dump(2) + "\n");
    } catch (const std::exception& inner) {
      std::cerr << "error while flushing partial results: " << inner.what() << "\n";
    }
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  try {
    write_runs_csv(result.runs, (fs::path(cfg.out_dir) / "runs.csv").string());
    write_runs_meta_csv(result.runs, (fs::path(cfg.out_dir) / "runs_meta.csv").string());
    write_rlr_csv(result.rlr, (fs::path(cfg.out_dir) / "rlr.csv").string());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  std::cout << "wrote " << result.runs.size() << " runs to " << cfg.out_dir << "\n";
  return kExitOk;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != expected_header) {
    throw ConfigError("schema mismatch in " + path);
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    rows.push_back(std::move(fields));
  }
  return rows;
}

int cmd_report(const std::string& runs_path, const std::string& rlr_path,
               const std::string& out_dir) {
  const std::string runs_header =
      "stream,detector,attack,level,budget,repeat,seed,instances,windows,mean_accuracy,"
      "detections,false_alarms,delay,true_change";
  std::vector<std::vector<std::string>> runs;
  std::vector<std::vector<std::string>> rlr;
  try {
    runs = read_csv(runs_path, runs_header);
    std::ifstream in(rlr_path);
    if (!in) throw std::runtime_error("cannot read " + rlr_path);
    std::string header;
    std::getline(in, header);
    if (header.rfind("stream,detector,attack,budget,level_1", 0) != 0) {
      throw ConfigError("schema mismatch in " + rlr_path);
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string f;
      while (std::getline(ss, f, ',')) fields.push_back(f);
      if (!line.empty() && line.back() == ',') fields.push_back("");
      rlr.push_back(std::move(fields));
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  try {
    fs::create_directories(out_dir);

    // accuracy-vs-level series, averaged over repeats
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto& r : runs) {
      if (r.size() < 10) throw ConfigError("schema mismatch in " + runs_path);
      std::string key = r[0] + ',' + r[1] + ',' + r[2] + ',' + r[4] + ',' +
                        (r[2] == "none" ? std::string("0") : r[3]);
      auto& slot = acc[key];
      slot.first += std::stod(r[9]);
      slot.second += 1;
    }
    std::ostringstream series;
    series << "stream,detector,attack,budget,level,mean_accuracy\n" << std::setprecision(12);
    for (const auto& [key, v] : acc) {
      series << key << ',' << v.first / v.second << '\n';
    }
    atomic_write((fs::path(out_dir) / "accuracy_series.csv").string(), series.str());

    // mean RLR rank per detector within each attack suite; rank 1 = most
    // robust (lowest aggregate RLR), ties averaged
    std::map<std::string, std::vector<std::pair<std::string, double>>> cells;
    for (const auto& r : rlr) {
      if (r.size() < 15) throw ConfigError("schema mismatch in " + rlr_path);
      std::string group = r[2] + '|' + r[0] + '|' + r[3];
      cells[group].push_back({r[1], std::stod(r[14])});
    }
    std::map<std::string, std::pair<double, int>> rank_acc;
    for (auto& [group, entries] : cells) {
      std::sort(entries.begin(), entries.end(),
                [](const auto& a, const auto& b) { return a.second < b.second; });
      std::string attack = group.substr(0, group.find('|'));
      std::size_t i = 0;
      while (i < entries.size()) {
        std::size_t j = i;
        while (j + 1 < entries.size() && entries[j + 1].second == entries[i].second) ++j;
        double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t m = i; m <= j; ++m) {
          auto& slot = rank_acc[attack + ',' + entries[m].first];
          slot.first += rank;
          slot.second += 1;
        }
        i = j + 1;
      }
    }
    std::ostringstream table;
    table << "attack,detector,mean_rank\n" << std::setprecision(6);
    for (const auto& [key, v] : rank_acc) {
      table << key << ',' << v.first / v.second << '\n';
    }
    atomic_write((fs::path(out_dir) / "rank_table.csv").string(), table.str());

    std::cout << "mean RLR rank by attack suite (1 = most robust):\n";
    for (const auto& [key, v] : rank_acc) {
      std::cout << "  " << key << "  " << std::fixed << std::setprecision(2)
                << v.first / v.second << "\n";
      std::cout.unsetf(std::ios::fixed);
    }
    std::cout << "wrote accuracy_series.csv and rank_table.csv to " << out_dir << "\n";
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"driftlab: drift detection under adversarial streams"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "write a synthetic stream to CSV with attack audit");
  std::string gen_benchmark;
  double gen_scale = 0.1;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "stream.csv";
  double gen_flip = 0.0;
  int gen_inject = 0;
  int gen_concept_size = 250;
  double gen_budget = 1.0;
  gen->add_option("--benchmark", gen_benchmark,
                  "benchmark name (HYP_I, LED_S, RBF_G, RBF_S, SEA_G, TRE_S)")
      ->required();
  gen->add_option("--scale", gen_scale, "length scale in (0, 1]");
  gen->add_option("--seed", gen_seed, "stream seed");
  gen->add_option("--out", gen_out, "output CSV path");
  gen->add_option("--flip", gen_flip, "label flip ratio");
  gen->add_option("--inject", gen_inject, "number of injected fake concepts");
  gen->add_option("--concept-size", gen_concept_size, "instances per injected concept");
  gen->add_option("--budget", gen_budget, "label budget fraction in (0, 1]");

  auto* run = app.add_subcommand("run", "execute the experiment matrix from a config file");
  std::string run_config;
  std::string run_out;
  CliOverrides overrides;
  run->add_option("--config", run_config, "experiment config (JSON)")->required();
  run->add_option("--out", run_out, "output directory (overrides config)");
  auto* jobs_opt = run->add_option("--jobs", overrides.jobs, "parallel runs");
  auto* seed_opt = run->add_option("--seed", overrides.seed, "master seed override");
  auto* scale_opt = run->add_option("--scale", overrides.scale, "length scale override");

  auto* report = app.add_subcommand("report", "summarize runs.csv and rlr.csv");
  std::string rep_runs = "runs.csv";
  std::string rep_rlr = "rlr.csv";
  std::string rep_out = "report";
  report->add_option("--runs", rep_runs, "runs.csv path");
  report->add_option("--rlr", rep_rlr, "rlr.csv path");
  report->add_option("--out", rep_out, "report output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (gen->parsed()) {
    return cmd_generate(gen_benchmark, gen_scale, gen_seed, gen_out, gen_flip, gen_inject,
                        gen_concept_size, gen_budget);
  }
  if (run->parsed()) {
    overrides.has_jobs = jobs_opt->count() > 0;
    overrides.has_seed = seed_opt->count() > 0;
    overrides.has_scale = scale_opt->count() > 0;
    overrides.out_dir = run_out;
    return cmd_run(run_config, overrides);
  }
  if (report->parsed()) {
    return cmd_report(rep_runs, rep_rlr, rep_out);
  }
  return kExitConfig;
}
