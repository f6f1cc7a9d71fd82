// Command-line front end: run scenarios, generate the bundled experiment
// scenarios and summarize metrics CSVs.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "wbmc/model_io.hpp"
#include "wbmc/sim.hpp"

namespace {

struct CsvSummary {
  long ticks = 0;
  long failures = 0;
  long fallback = 0;
  long frozen = 0;
  double min_obstacle = std::numeric_limits<double>::infinity();
  double min_inter_arm = std::numeric_limits<double>::infinity();
  double median_err_in_episode = std::numeric_limits<double>::quiet_NaN();
  double median_err_outside = std::numeric_limits<double>::quiet_NaN();
};

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CsvSummary summarize_csv(std::istream& in) {
  CsvSummary s;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty metrics file");
  std::vector<double> err_in, err_out;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 19) throw std::runtime_error("malformed metrics row: " + line);
    ++s.ticks;
    if (std::stoi(cols[2]) != 0) ++s.failures;
    s.fallback += std::stoi(cols[3]);
    s.frozen += std::stoi(cols[4]);
    const int collision_rows = std::stoi(cols[9]);
    const double err_pos = std::stod(cols[13]);
    (collision_rows > 0 ? err_in : err_out).push_back(err_pos);
    const double obstacle = std::stod(cols[17]);
    if (std::isfinite(obstacle)) s.min_obstacle = std::min(s.min_obstacle, obstacle);
    const double inter_arm = std::stod(cols[18]);
    if (std::isfinite(inter_arm)) s.min_inter_arm = std::min(s.min_inter_arm, inter_arm);
  }
  s.median_err_in_episode = median(std::move(err_in));
  s.median_err_outside = median(std::move(err_out));
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"whole-body reactive motion controller"};
  app.require_subcommand(1);

  std::string model_path = "models/icub_like.yaml";
  std::string config_path = "configs/default.yaml";
  app.add_option("--model", model_path, "robot model file")->capture_default_str();
  app.add_option("--config", config_path, "controller config file")->capture_default_str();

  auto* run = app.add_subcommand("run", "run a scenario");
  std::string scenario_path, csv_path, summary_path, out_dir;
  bool dump_qp = false;
  long ticks = 0;
  double pos_tol = 5e-3, ori_tol = 0.1;
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir,
                  "write metrics.csv and summary.txt (and the QP dump) into this directory");
  run->add_option("--csv", csv_path, "write per-tick metrics CSV");
  run->add_option("--summary", summary_path, "write the run summary (default stdout)");
  run->add_option("--ticks", ticks, "override the tick budget");
  run->add_flag("--dump-qp", dump_qp, "dump every per-tick QP problem");
  run->add_option("--pos-tol", pos_tol, "reach position tolerance, m")->capture_default_str();
  run->add_option("--ori-tol", ori_tol, "reach orientation tolerance, rad")->capture_default_str();

  auto* gen = app.add_subcommand("gen-exp", "generate a bundled experiment scenario");
  std::string exp_id, gen_out;
  unsigned seed = 7;
  gen->add_option("id", exp_id, "experiment id: 1, 2, 3, 4, 5-1, 5-2, 5-3")->required();
  gen->add_option("--out", gen_out, "output file (default scenarios/exp<id>.yaml)");
  gen->add_option("--seed", seed, "target shuffle seed")->capture_default_str();

  auto* summ = app.add_subcommand("summarize", "aggregate a metrics CSV");
  std::string summarize_path;
  summ->add_option("csv", summarize_path, "metrics CSV file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const wbmc::RobotModel model = wbmc::load_model(model_path);
      const wbmc::ControllerConfig config = wbmc::load_config(config_path, model);
      const wbmc::Scenario scenario = wbmc::load_scenario(scenario_path);
      wbmc::RunOptions options;
      options.reach_pos_tol = pos_tol;
      options.reach_ori_tol = ori_tol;
      options.max_ticks = ticks;
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        if (csv_path.empty()) csv_path = out_dir + "/metrics.csv";
        if (summary_path.empty()) summary_path = out_dir + "/summary.txt";
      }
      std::ofstream csv;
      if (!csv_path.empty()) {
        csv.open(csv_path);
        if (!csv) throw std::runtime_error("cannot write " + csv_path);
        options.csv = &csv;
      }
      std::ofstream dump;
      if (dump_qp) {
        const std::string dump_path =
            (out_dir.empty() ? std::string("qp_dump.txt") : out_dir + "/qp_dump.txt");
        dump.open(dump_path);
        if (!dump) throw std::runtime_error("cannot write " + dump_path);
        options.qp_dump = &dump;
      }
      const wbmc::RunResult result = wbmc::run_scenario(model, config, scenario, options);
      if (summary_path.empty()) {
        wbmc::write_summary(std::cout, scenario, result);
      } else {
        std::ofstream out(summary_path);
        if (!out) throw std::runtime_error("cannot write " + summary_path);
        wbmc::write_summary(out, scenario, result);
      }
      // Hard errors (solver failures, frozen safety stops) fail the run.
      if (result.solver_failures > 0 || result.frozen_ticks > 0) return 1;
    } else if (*gen) {
      const wbmc::RobotModel model = wbmc::load_model(model_path);
      const wbmc::Scenario scenario = wbmc::make_experiment(model, exp_id, seed);
      if (gen_out.empty()) gen_out = "scenarios/exp" + exp_id + ".yaml";
      wbmc::save_scenario(scenario, gen_out);
      std::cout << "wrote " << gen_out << "\n";
    } else if (*summ) {
      std::ifstream in(summarize_path);
      if (!in) throw std::runtime_error("cannot read " + summarize_path);
      const CsvSummary s = summarize_csv(in);
      std::cout << "ticks: " << s.ticks << "\n"
                << "solver failures: " << s.failures << "\n"
                << "fallback ticks: " << s.fallback << "\n"
                << "frozen ticks: " << s.frozen << "\n";
      if (std::isfinite(s.min_obstacle)) {
        std::cout << "min obstacle distance: " << s.min_obstacle << "\n";
      }
      if (std::isfinite(s.min_inter_arm)) {
        std::cout << "min inter-arm distance: " << s.min_inter_arm << "\n";
      }
      std::cout << "median primary position error (episodes): " << s.median_err_in_episode << "\n"
                << "median primary position error (outside): " << s.median_err_outside << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
