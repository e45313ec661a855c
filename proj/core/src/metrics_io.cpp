#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "sketchsgd/error.hpp"
#include "sketchsgd/experiment.hpp"

namespace sketchsgd {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string header_value(const MetricsFile& f, const std::string& key, const std::string& fallback = "-") {
  auto it = f.header.find(key);
  return it == f.header.end() ? fallback : it->second;
}

}  // namespace

void write_metrics(std::ostream& out, const ExperimentConfig& config, const ResolvedExperiment& resolved,
                   const Metrics& metrics) {
  out << "# sketchsgd metrics v1\n";
  for (const auto& [key, value] : config.entries()) out << "# config." << key << " = " << value << '\n';
  for (const auto& [key, value] : resolved.derived) out << "# resolved." << key << " = " << value << '\n';
  out << kMetricsColumns << '\n';
  for (const auto& r : metrics.records) {
    const RoundStats& s = r.stats;
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.t, num(r.lr), num(r.train_loss),
                       num(r.test_metric), r.update_nnz, r.union_size, s.up_sketch_elems, s.up_exact_elems,
                       s.down_update_elems, s.bytes_up, s.bytes_down, s.request_bytes,
                       num(r.t == 0 ? 0.0 : s.compression_factor()));
  }
  const MetricsSummary& m = metrics.summary;
  out << "# summary.final_train_loss = " << num(m.final_train_loss) << '\n';
  out << "# summary.final_test_metric = " << num(m.final_test_metric) << '\n';
  if (m.has_average) {
    out << "# summary.average_train_loss = " << num(m.average_train_loss) << '\n';
    out << "# summary.average_test_metric = " << num(m.average_test_metric) << '\n';
  }
  out << "# summary.total_bytes_up = " << m.total_bytes_up << '\n';
  out << "# summary.total_bytes_down = " << m.total_bytes_down << '\n';
  out << "# summary.total_request_bytes = " << m.total_request_bytes << '\n';
  out << "# summary.compression_factor = " << num(m.compression_factor) << '\n';
  out << "# summary.byte_compression_factor = " << num(m.byte_compression_factor) << '\n';
  out << "# summary.g_squared_max = " << num(m.g_squared_max) << '\n';
  out << "# summary.sigma_squared = " << num(m.sigma_squared) << '\n';
}

void write_metrics_atomic(const std::filesystem::path& path, const ExperimentConfig& config,
                          const ResolvedExperiment& resolved, const Metrics& metrics) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + tmp.string() + "'");
    write_metrics(out, config, resolved, metrics);
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "error writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::kIoError, "cannot move metrics into '" + path.string() + "': " + ec.message());
  }
}

double MetricsFile::column(std::size_t row, const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return rows.at(row).at(i);
  }
  throw Error(ErrorCode::kParseError, path + ": no column '" + name + "'");
}

MetricsFile read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParseError, "cannot read metrics file '" + path.string() + "'");
  MetricsFile f;
  f.path = path.string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos && line.size() > 2) {
        f.header[line.substr(2, eq - 2)] = line.substr(eq + 3);
      }
      continue;
    }
    std::vector<std::string> cells = split_csv(line);
    if (f.columns.empty()) {
      f.columns = std::move(cells);
      continue;
    }
    if (cells.size() != f.columns.size()) {
      throw Error(ErrorCode::kParseError, f.path + ":" + std::to_string(line_no) + ": expected " +
                                              std::to_string(f.columns.size()) + " fields, found " +
                                              std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i] == "nan") {
        row[i] = std::nan("");
        continue;
      }
      auto [ptr, ec] = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), row[i]);
      if (ec != std::errc() || ptr != cells[i].data() + cells[i].size()) {
        throw Error(ErrorCode::kParseError,
                    f.path + ":" + std::to_string(line_no) + ": bad number '" + cells[i] + "'");
      }
    }
    f.rows.push_back(std::move(row));
  }
  if (f.columns.empty() || f.rows.empty()) {
    throw Error(ErrorCode::kParseError, f.path + ": no metrics rows found");
  }
  return f;
}

void print_report(std::ostream& out, const std::vector<MetricsFile>& runs) {
  struct Row {
    std::string cells[10];
  };
  const std::string titles[10] = {"run",        "algorithm",   "mode",        "W",        "T",
                                  "train_loss", "test_metric", "avg_test",    "compress", "bytes_up"};
  std::vector<Row> rows;
  for (const auto& f : runs) {
    Row r;
    r.cells[0] = std::filesystem::path(f.path).filename().string();
    r.cells[1] = header_value(f, "config.optimizer.algorithm");
    r.cells[2] = header_value(f, "config.optimizer.mode");
    r.cells[3] = header_value(f, "config.optimizer.workers");
    r.cells[4] = header_value(f, "config.optimizer.rounds");
    auto fixed = [&](const std::string& key) {
      const std::string v = header_value(f, key);
      double x = 0.0;
      if (v == "-" || std::from_chars(v.data(), v.data() + v.size(), x).ec != std::errc()) return v;
      return fmt::format("{:.6g}", x);
    };
    r.cells[5] = fixed("summary.final_train_loss");
    r.cells[6] = fixed("summary.final_test_metric");
    r.cells[7] = fixed("summary.average_test_metric");
    r.cells[8] = fixed("summary.compression_factor");
    r.cells[9] = header_value(f, "summary.total_bytes_up");
    rows.push_back(std::move(r));
  }
  std::size_t width[10];
  for (int i = 0; i < 10; ++i) {
    width[i] = titles[i].size();
    for (const auto& r : rows) width[i] = std::max(width[i], r.cells[i].size());
  }
  auto emit = [&](const std::string* cells) {
    for (int i = 0; i < 10; ++i) {
      if (i == 0) {
        fmt::print(out, "{:<{}}", cells[i], width[i]);
      } else {
        fmt::print(out, "  {:>{}}", cells[i], width[i]);
      }
    }
    out << '\n';
  };
  emit(titles);
  for (const auto& r : rows) emit(r.cells);
}

void write_long_csv(std::ostream& out, const std::vector<MetricsFile>& runs) {
  out << "run,algorithm,t,series,value\n";
  for (const auto& f : runs) {
    const std::string name = std::filesystem::path(f.path).filename().string();
    const std::string algorithm = header_value(f, "config.optimizer.algorithm");
    for (std::size_t i = 0; i < f.rows.size(); ++i) {
      const auto t = static_cast<std::size_t>(f.column(i, "t"));
      for (const char* series : {"train_loss", "test_metric"}) {
        const double v = f.column(i, series);
        if (std::isnan(v)) continue;
        out << name << ',' << algorithm << ',' << t << ',' << series << ',' << num(v) << '\n';
      }
    }
  }
}

}  // namespace sketchsgd
