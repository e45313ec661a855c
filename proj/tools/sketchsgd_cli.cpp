// sketchsgd run <config> [--out path] [--seed-override k=v ...]
// sketchsgd report <metrics.csv>... [--csv path]

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <fmt/core.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sketchsgd/error.hpp"
#include "sketchsgd/experiment.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out, const std::vector<std::string>& overrides) {
  sketchsgd::ExperimentConfig config = sketchsgd::ExperimentConfig::load(config_path);
  for (const auto& o : overrides) sketchsgd::apply_seed_override(config, o);
  if (!out.empty()) config.set("output.path", out);

  sketchsgd::ResolvedExperiment resolved = sketchsgd::resolve(config);
  const sketchsgd::Metrics metrics = sketchsgd::run_training(*resolved.problem, resolved.optimizer, resolved.sketch,
                                                             resolved.seeds, resolved.options);
  sketchsgd::write_metrics_atomic(resolved.output, config, resolved, metrics);

  const auto& s = metrics.summary;
  fmt::print("wrote {} ({} rounds)\n", resolved.output.string(), metrics.records.size() - 1);
  fmt::print("final train_loss {:.6g}  {} {:.6g}  compression {:.6g}  bytes_up {}\n", s.final_train_loss,
             resolved.problem->test_metric_name(), s.final_test_metric, s.compression_factor, s.total_bytes_up);
  return 0;
}

int report_command(const std::vector<std::string>& paths, const std::string& csv) {
  std::vector<sketchsgd::MetricsFile> runs;
  runs.reserve(paths.size());
  for (const auto& p : paths) runs.push_back(sketchsgd::read_metrics(p));
  sketchsgd::print_report(std::cout, runs);
  if (!csv.empty()) {
    std::ofstream f(csv);
    if (!f) throw sketchsgd::Error(sketchsgd::ErrorCode::kIoError, "cannot write '" + csv + "'");
    sketchsgd::write_long_csv(f, runs);
    if (!f) throw sketchsgd::Error(sketchsgd::ErrorCode::kIoError, "write failed for '" + csv + "'");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketched distributed SGD experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "Run one experiment and write a metrics CSV");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--out", out, "Metrics output path (overrides output.path)");
  run->add_option("--seed-override", overrides, "Seed assignment name=value (problem, data, sketch, rng)");

  std::vector<std::string> paths;
  std::string csv;
  auto* report = app.add_subcommand("report", "Compare finished runs");
  report->add_option("metrics", paths, "Metrics CSV files")->required();
  report->add_option("--csv", csv, "Also write long-format CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path, out, overrides);
    return report_command(paths, csv);
  } catch (const sketchsgd::Error& e) {
    fmt::print(stderr, "sketchsgd: {}: {}\n", sketchsgd::to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    fmt::print(stderr, "sketchsgd: {}\n", e.what());
  }
  return 1;
}
