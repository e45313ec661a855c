#include "sketchsgd/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "sketchsgd/error.hpp"

namespace sketchsgd {

namespace {

struct KeySpec {
  const char* key;
  const char* default_value;
};

// Canonical order; also the echo order in metrics headers.
constexpr KeySpec kKeys[] = {
    {"problem.kind", "logistic"},
    {"problem.dataset", ""},
    {"problem.test_dataset", ""},
    {"problem.test_fraction", "0.2"},
    {"problem.positive_class", ""},
    {"problem.normalize", "true"},
    {"problem.bias_feature", "true"},
    {"problem.synth_n", "2000"},
    {"problem.synth_test_n", "500"},
    {"problem.synth_d", "20"},
    {"problem.separation", "3"},
    {"problem.lambda", "0.01"},
    {"problem.batch_size", "32"},
    {"problem.quad_d", "64"},
    {"problem.quad_curvature_min", "0.1"},
    {"problem.quad_curvature_max", "1"},
    {"problem.quad_sigma", "0.1"},
    {"problem.quad_pool", "1024"},
    {"optimizer.algorithm", "sketched"},
    {"optimizer.mode", "empirical"},
    {"optimizer.k", "10"},
    {"optimizer.P", "10"},
    {"optimizer.momentum", "0"},
    {"optimizer.xi", "3"},
    {"optimizer.beta", "5"},
    {"optimizer.mu", "1"},
    {"optimizer.rounds", "100"},
    {"optimizer.workers", "1"},
    {"optimizer.lr", "0.1"},
    {"optimizer.lr_schedule", ""},
    {"optimizer.uncompressed_bias", "false"},
    {"optimizer.bias_coords", ""},
    {"optimizer.pad", "uniform"},
    {"sketch.rows", "0"},
    {"sketch.cols", "0"},
    {"sketch.delta", "0.05"},
    {"sketch.row_factor", "1"},
    {"sketch.col_factor", "6"},
    {"seeds.problem", ""},
    {"seeds.data", ""},
    {"seeds.sketch", ""},
    {"seeds.rng", ""},
    {"output.path", "metrics.csv"},
    {"output.eval_every", "1"},
};

constexpr const char* kSeedKeys[] = {"seeds.problem", "seeds.data", "seeds.sketch", "seeds.rng"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw Error(ErrorCode::kInvalidConfig, "config key '" + key + "': invalid value '" + value + "' (expected " +
                                             expected + ")");
}

std::uint64_t as_u64(const ExperimentConfig& c, const std::string& key) {
  const std::string& v = c.get(key);
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a nonnegative integer");
  return out;
}

std::size_t as_size(const ExperimentConfig& c, const std::string& key) {
  return static_cast<std::size_t>(as_u64(c, key));
}

double as_double(const ExperimentConfig& c, const std::string& key) {
  const std::string& v = c.get(key);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    bad_value(key, v, "a finite number");
  }
  return out;
}

bool as_bool(const ExperimentConfig& c, const std::string& key) {
  const std::string& v = c.get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::filesystem::path resolve_path(const ExperimentConfig& c, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !c.base_dir().empty()) path = c.base_dir() / path;
  return path;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  for (const auto& spec : kKeys) values_[spec.key] = spec.default_value;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& origin) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    if (stripped.front() == '[') {
      if (stripped.back() != ']') throw Error(ErrorCode::kParseError, where + ": malformed section header");
      section = trim(std::string_view(stripped).substr(1, stripped.size() - 2));
      const bool known = std::any_of(std::begin(kKeys), std::end(kKeys), [&](const KeySpec& k) {
        return std::string_view(k.key).starts_with(section + ".");
      });
      if (!known) throw Error(ErrorCode::kParseError, where + ": unknown section '" + section + "'");
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError, where + ": expected 'key = value', got '" + stripped + "'");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (section.empty()) throw Error(ErrorCode::kParseError, where + ": key '" + key + "' outside any section");
    const std::string qualified = section + "." + key;
    if (!config.values_.contains(qualified)) {
      throw Error(ErrorCode::kParseError, where + ": unknown config key '" + qualified + "'");
    }
    if (config.explicit_[qualified]) {
      throw Error(ErrorCode::kParseError, where + ": duplicate config key '" + qualified + "'");
    }
    config.values_[qualified] = value;
    config.explicit_[qualified] = true;
  }
  return config;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  ExperimentConfig config = parse(buffer.str(), path.string());
  config.set_base_dir(path.parent_path());
  return config;
}

const std::string& ExperimentConfig::get(const std::string& qualified_key) const {
  auto it = values_.find(qualified_key);
  if (it == values_.end()) throw Error(ErrorCode::kParseError, "unknown config key '" + qualified_key + "'");
  return it->second;
}

void ExperimentConfig::set(const std::string& qualified_key, const std::string& value) {
  if (!values_.contains(qualified_key)) {
    throw Error(ErrorCode::kParseError, "unknown config key '" + qualified_key + "'");
  }
  values_[qualified_key] = value;
  explicit_[qualified_key] = true;
}

bool ExperimentConfig::is_set(const std::string& qualified_key) const {
  auto it = explicit_.find(qualified_key);
  return it != explicit_.end() && it->second;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& spec : kKeys) out.emplace_back(spec.key, values_.at(spec.key));
  return out;
}

void apply_seed_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw Error(ErrorCode::kParseError, "seed override '" + assignment + "' is not name=value");
  }
  const std::string name = trim(std::string_view(assignment).substr(0, eq));
  const std::string value = trim(std::string_view(assignment).substr(eq + 1));
  const std::string key = "seeds." + name;
  if (std::none_of(std::begin(kSeedKeys), std::end(kSeedKeys), [&](const char* k) { return key == k; })) {
    throw Error(ErrorCode::kParseError, "unknown seed '" + name + "' in override");
  }
  config.set(key, value);
}

ResolvedExperiment resolve(const ExperimentConfig& c) {
  ResolvedExperiment r;
  for (const char* key : kSeedKeys) {
    if (!c.is_set(key)) throw Error(ErrorCode::kInvalidConfig, std::string("config key '") + key + "' must be set");
  }
  const std::uint64_t problem_seed = as_u64(c, "seeds.problem");
  r.seeds.data = as_u64(c, "seeds.data");
  r.seeds.sketch = as_u64(c, "seeds.sketch");
  r.seeds.rng = as_u64(c, "seeds.rng");

  const auto kind = parse_problem_kind(c.get("problem.kind"));
  if (!kind) bad_value("problem.kind", c.get("problem.kind"), "quadratic, logistic or hinge");
  const double lambda = as_double(c, "problem.lambda");
  if (lambda < 0.0) bad_value("problem.lambda", c.get("problem.lambda"), "a nonnegative number");

  if (*kind == ProblemKind::kQuadratic) {
    const std::size_t d = as_size(c, "problem.quad_d");
    QuadraticSpec spec = make_quadratic(d, as_double(c, "problem.quad_curvature_min"),
                                        as_double(c, "problem.quad_curvature_max"),
                                        as_double(c, "problem.quad_sigma"), problem_seed);
    r.problem = std::make_unique<QuadraticProblem>(std::move(spec), as_size(c, "problem.quad_pool"), problem_seed);
  } else {
    Dataset train, test;
    std::string preprocessing = "none";
    const std::string& dataset_path = c.get("problem.dataset");
    if (dataset_path.empty()) {
      const std::size_t n = as_size(c, "problem.synth_n");
      const std::size_t n_test = as_size(c, "problem.synth_test_n");
      const Dataset all =
          synth_data(n + n_test, as_size(c, "problem.synth_d"), as_double(c, "problem.separation"), problem_seed);
      std::tie(train, test) = split_dataset(all, n_test);
      r.derived.emplace_back("source", "synthetic");
    } else {
      const auto path = resolve_path(c, dataset_path);
      if (!std::filesystem::exists(path)) {
        throw Error(ErrorCode::kIoError, "config key 'problem.dataset': file '" + path.string() + "' does not exist");
      }
      Dataset loaded = load_dataset(path);
      const std::string& test_path = c.get("problem.test_dataset");
      if (!test_path.empty()) {
        const auto tpath = resolve_path(c, test_path);
        if (!std::filesystem::exists(tpath)) {
          throw Error(ErrorCode::kIoError,
                      "config key 'problem.test_dataset': file '" + tpath.string() + "' does not exist");
        }
        train = std::move(loaded);
        test = load_dataset(tpath);
      } else {
        const double frac = as_double(c, "problem.test_fraction");
        if (frac < 0.0 || frac >= 1.0) bad_value("problem.test_fraction", c.get("problem.test_fraction"), "[0, 1)");
        const auto n_test = static_cast<std::size_t>(std::floor(frac * static_cast<double>(loaded.size())));
        std::tie(train, test) = split_dataset(loaded, n_test);
      }
      const std::string& positive = c.get("problem.positive_class");
      if (!positive.empty()) {
        const double cls = as_double(c, "problem.positive_class");
        train = one_vs_all(train, cls);
        if (test.size() > 0) test = one_vs_all(test, cls);
      }
      for (double y : train.labels) {
        if (y != 1.0 && y != -1.0) {
          throw Error(ErrorCode::kInvalidConfig,
                      "dataset labels must be +-1; set 'problem.positive_class' for multiclass data");
        }
      }
      std::vector<std::string> steps;
      if (as_bool(c, "problem.normalize")) {
        const Dataset reference = train;
        normalize_unit_range(train, reference);
        if (test.size() > 0) normalize_unit_range(test, reference);
        steps.push_back("minmax01");
      }
      if (as_bool(c, "problem.bias_feature")) {
        append_bias_feature(train);
        if (test.size() > 0) append_bias_feature(test);
        steps.push_back("bias1");
      }
      if (!steps.empty()) {
        preprocessing.clear();
        for (std::size_t i = 0; i < steps.size(); ++i) preprocessing += (i ? "+" : "") + steps[i];
      }
      r.derived.emplace_back("source", path.string());
    }
    r.derived.emplace_back("preprocessing", preprocessing);
    r.derived.emplace_back("train_samples", std::to_string(train.size()));
    r.derived.emplace_back("test_samples", std::to_string(test.size()));
    r.derived.emplace_back("train_checksum", fmt::format("{:016x}", train.checksum));
    r.derived.emplace_back("test_checksum", fmt::format("{:016x}", test.checksum));
    if (*kind == ProblemKind::kLogistic) {
      r.problem = std::make_unique<LogisticProblem>(std::move(train), std::move(test), lambda);
    } else {
      r.problem = std::make_unique<HingeSvmProblem>(std::move(train), std::move(test), lambda);
    }
  }
  const std::size_t d = r.problem->dimension();

  auto& o = r.optimizer;
  const auto algorithm = parse_algorithm(c.get("optimizer.algorithm"));
  if (!algorithm) bad_value("optimizer.algorithm", c.get("optimizer.algorithm"), "sketched, vanilla, true-topk or local-topk");
  const auto mode = parse_mode(c.get("optimizer.mode"));
  if (!mode) bad_value("optimizer.mode", c.get("optimizer.mode"), "theory or empirical");
  o.algorithm = *algorithm;
  o.mode = *mode;
  o.k = as_size(c, "optimizer.k");
  o.p = as_size(c, "optimizer.P");
  o.momentum = as_double(c, "optimizer.momentum");
  o.xi = as_double(c, "optimizer.xi");
  o.beta = as_double(c, "optimizer.beta");
  o.mu_scale = as_double(c, "optimizer.mu");
  o.rounds = as_size(c, "optimizer.rounds");
  o.workers = as_size(c, "optimizer.workers");
  const std::string& schedule = c.get("optimizer.lr_schedule");
  if (schedule.empty()) {
    o.lr = LrSchedule::constant(as_double(c, "optimizer.lr"));
  } else {
    std::vector<LrSchedule::Knot> knots;
    for (const std::string& item : split_list(schedule)) {
      const auto colon = item.find(':');
      double round = 0.0, lr = 0.0;
      if (colon == std::string::npos ||
          std::from_chars(item.data(), item.data() + colon, round).ec != std::errc() ||
          std::from_chars(item.data() + colon + 1, item.data() + item.size(), lr).ec != std::errc()) {
        bad_value("optimizer.lr_schedule", schedule, "comma-separated round:lr knots");
      }
      knots.push_back({round, lr});
    }
    try {
      o.lr = LrSchedule(std::move(knots));
    } catch (const Error& e) {
      bad_value("optimizer.lr_schedule", schedule, e.what());
    }
  }
  o.uncompressed_bias = as_bool(c, "optimizer.uncompressed_bias");
  for (const std::string& item : split_list(c.get("optimizer.bias_coords"))) {
    std::size_t idx = 0;
    if (std::from_chars(item.data(), item.data() + item.size(), idx).ec != std::errc()) {
      bad_value("optimizer.bias_coords", c.get("optimizer.bias_coords"), "comma-separated indices");
    }
    o.bias_coords.push_back(idx);
  }
  if (const auto pad = parse_pad_strategy(c.get("optimizer.pad"))) {
    o.pad = *pad;
  } else {
    bad_value("optimizer.pad", c.get("optimizer.pad"), "uniform or largest");
  }
  try {
    validate(o, d);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("optimizer section: ") + e.what());
  }

  const std::size_t rows = as_size(c, "sketch.rows");
  const std::size_t cols = as_size(c, "sketch.cols");
  if ((rows == 0) != (cols == 0)) {
    throw Error(ErrorCode::kInvalidConfig, "config keys 'sketch.rows' and 'sketch.cols' must be set together");
  }
  if (rows > 0) {
    r.sketch = SketchDims{rows, cols};
    r.derived.emplace_back("sketch_sizing", "explicit");
  } else if (o.algorithm == Algorithm::kSketched) {
    SizeConstants constants;
    constants.row_factor = as_double(c, "sketch.row_factor");
    constants.col_factor = as_size(c, "sketch.col_factor");
    r.sketch = size_for(o.k, d, as_double(c, "sketch.delta"), constants);
    r.derived.emplace_back("sketch_sizing", "size_for");
  } else {
    r.derived.emplace_back("sketch_sizing", "unused");
  }

  r.options.batch_size = as_size(c, "problem.batch_size");
  r.options.eval_every = as_size(c, "output.eval_every");
  if (r.options.batch_size < o.workers) {
    throw Error(ErrorCode::kInvalidConfig, "config key 'problem.batch_size' must be >= optimizer.workers");
  }
  if (r.options.eval_every == 0) bad_value("output.eval_every", c.get("output.eval_every"), "a positive integer");
  r.output = c.get("output.path");

  r.derived.emplace_back("dimension", std::to_string(d));
  r.derived.emplace_back("sketch_rows", std::to_string(r.sketch.rows));
  r.derived.emplace_back("sketch_cols", std::to_string(r.sketch.cols));
  r.derived.emplace_back("test_metric", std::string(r.problem->test_metric_name()));
  if (o.algorithm == Algorithm::kSketched && o.mode == OptimizerMode::kTheory) {
    r.derived.emplace_back("theory_min_xi", fmt::format("{}", theory_min_xi(d, o.k, o.beta)));
  }
  return r;
}

}  // namespace sketchsgd
