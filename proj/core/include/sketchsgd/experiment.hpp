#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sketchsgd/cluster.hpp"
#include "sketchsgd/optim.hpp"
#include "sketchsgd/problems.hpp"

namespace sketchsgd {

// Sectioned "key = value" experiment description. Every recognised key has a
// default except the [seeds] block, which must be spelled out.
//
//   [problem]    kind, dataset, test_dataset, test_fraction, positive_class,
//                normalize, bias_feature, synth_n, synth_test_n, synth_d,
//                separation, lambda, batch_size, quad_d, quad_curvature_min,
//                quad_curvature_max, quad_sigma, quad_pool
//   [optimizer]  algorithm, mode, k, P, momentum, xi, beta, mu, rounds,
//                workers, lr, lr_schedule, uncompressed_bias, bias_coords, pad
//   [sketch]     rows, cols, delta, row_factor, col_factor
//   [seeds]      problem, data, sketch, rng
//   [output]     path, eval_every
class ExperimentConfig {
 public:
  // Throws Error(kParseError) naming the line or key at fault.
  static ExperimentConfig parse(const std::string& text, const std::string& origin = "<config>");
  static ExperimentConfig load(const std::filesystem::path& path);

  // Value for "section.key" (default when unset).
  const std::string& get(const std::string& qualified_key) const;
  void set(const std::string& qualified_key, const std::string& value);
  bool is_set(const std::string& qualified_key) const;

  // All keys in canonical order with resolved values.
  std::vector<std::pair<std::string, std::string>> entries() const;

  // Directory relative dataset paths are resolved against.
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

 private:
  ExperimentConfig();

  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
  std::filesystem::path base_dir_;
};

// Applies "name=value" seed overrides (name in problem|data|sketch|rng).
void apply_seed_override(ExperimentConfig& config, const std::string& assignment);

struct ResolvedExperiment {
  std::unique_ptr<Problem> problem;
  OptimizerConfig optimizer;
  SketchDims sketch;
  RunSeeds seeds;
  RunOptions options;
  std::filesystem::path output;
  // Derived facts echoed into the metrics header (dimension, checksums,
  // preprocessing, resolved sketch dims).
  std::vector<std::pair<std::string, std::string>> derived;
};

// Builds the problem and validates the combination. Throws Error(kInvalidConfig)
// or Error(kIoError) naming the offending key.
ResolvedExperiment resolve(const ExperimentConfig& config);

inline constexpr const char* kMetricsColumns =
    "t,lr,train_loss,test_metric,update_nnz,union_size,up_sketch_elems,up_exact_elems,down_update_elems,"
    "bytes_up,bytes_down,request_bytes,compression";

// CSV with a '#'-prefixed header echoing the config and a '#' summary trailer.
void write_metrics(std::ostream& out, const ExperimentConfig& config, const ResolvedExperiment& resolved,
                   const Metrics& metrics);
// Writes to a temporary sibling then renames over `path`.
void write_metrics_atomic(const std::filesystem::path& path, const ExperimentConfig& config,
                          const ResolvedExperiment& resolved, const Metrics& metrics);

struct MetricsFile {
  std::string path;
  std::map<std::string, std::string> header;   // "config.*", "resolved.*", "summary.*"
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  double column(std::size_t row, const std::string& name) const;
};

MetricsFile read_metrics(const std::filesystem::path& path);

// Aligned comparison table, one row per file.
void print_report(std::ostream& out, const std::vector<MetricsFile>& runs);
// Long-format run,t,series,value rows for external plotting.
void write_long_csv(std::ostream& out, const std::vector<MetricsFile>& runs);

}  // namespace sketchsgd
