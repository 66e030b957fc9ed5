#include "countflow/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace countflow {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw FormatError(source + ":" + std::to_string(line) + ": " + what);
}

template <typename Int>
bool parse_int(std::string_view s, Int& v) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

CountMatrix read_count_csv(std::istream& in, const std::string& source_name) {
  CountMatrix m;
  std::string raw;
  std::size_t line_no = 0;
  bool have_header = false;
  bool has_label = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_commas(line);
    if (!have_header) {
      std::size_t d = fields.size();
      if (fields.back() == "label") {
        has_label = true;
        --d;
      }
      if (d == 0) fail(source_name, line_no, "header has no count columns");
      for (std::size_t j = 0; j < d; ++j) {
        if (fields[j] != "x_" + std::to_string(j + 1)) {
          fail(source_name, line_no, "expected header column 'x_" + std::to_string(j + 1) + "', found '" +
                                         std::string(fields[j]) + "'");
        }
      }
      m.cols = d;
      have_header = true;
      continue;
    }
    const std::size_t expect = m.cols + (has_label ? 1 : 0);
    if (fields.size() != expect) {
      fail(source_name, line_no, "expected " + std::to_string(expect) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < m.cols; ++j) {
      Count v = 0;
      if (!parse_int(fields[j], v)) fail(source_name, line_no, "column " + std::to_string(j + 1) + ": '" + std::string(fields[j]) + "' is not an integer");
      if (v < 0) fail(source_name, line_no, "column " + std::to_string(j + 1) + ": negative count " + std::to_string(v));
      m.data.push_back(v);
    }
    if (has_label) {
      Label l = 0;
      if (!parse_int(fields.back(), l) || l < kNullLabel) {
        fail(source_name, line_no, "label '" + std::string(fields.back()) + "' is not a valid label");
      }
      m.labels.push_back(l);
    }
    ++m.rows;
  }
  if (!have_header) fail(source_name, line_no, "missing header row");
  return m;
}

CountMatrix read_count_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_count_csv(in, path.string());
}

void write_count_csv(std::ostream& out, const CountMatrix& m) {
  for (std::size_t j = 0; j < m.cols; ++j) out << (j ? "," : "") << "x_" << j + 1;
  if (m.has_labels()) out << ",label";
  out << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    for (std::size_t j = 0; j < m.cols; ++j) out << (j ? "," : "") << row[j];
    if (m.has_labels()) out << ',' << m.labels[r];
    out << '\n';
  }
}

void write_count_csv(const std::filesystem::path& path, const CountMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_count_csv(out, m);
  if (!out) throw IoError("write failed for " + path.string());
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_loss_csv(std::ostream& out, const std::vector<StepRecord>& trace) {
  out << "step,loss,coupling_cost\n";
  for (const auto& r : trace) out << r.step << ',' << format_real(r.loss) << ',' << format_real(r.coupling_cost) << '\n';
}

void write_trajectory_header(std::ostream& out, std::size_t dim) {
  out << "sample_id,step,t";
  for (std::size_t j = 0; j < dim; ++j) out << ",x_" << j + 1;
  out << '\n';
}

void write_trajectory(std::ostream& out, std::size_t sample_id, const Trajectory& trajectory) {
  for (std::size_t k = 0; k < trajectory.states.size(); ++k) {
    out << sample_id << ',' << trajectory.steps[k] << ',' << format_real(trajectory.times[k]);
    for (Count c : trajectory.states[k].values()) out << ',' << c;
    out << '\n';
  }
}

void write_heatmap_csv(std::ostream& out, const Heatmap& h) {
  out << 'z';
  for (double s : h.progress) out << ",s=" << format_real(s);
  out << '\n';
  for (std::size_t zi = 0; zi < h.z_values.size(); ++zi) {
    out << h.z_values[zi];
    for (std::size_t k = 0; k < h.progress.size(); ++k) out << ',' << format_real(h(zi, k));
    out << '\n';
  }
}

nlohmann::ordered_json to_json(const MetricReport& r) {
  return {{"w2", r.w2},
          {"mmd2_rbf", r.mmd2_rbf},
          {"bandwidth", r.bandwidth_used},
          {"n_source", r.n_source},
          {"n_target", r.n_target},
          {"seed", r.seed}};
}

nlohmann::ordered_json to_json(const ConditionalReport& r) {
  return {{"rmse_mu", r.rmse_mu},     {"rmse_var", r.rmse_var}, {"rmse_zero", r.rmse_zero},
          {"cov_f", r.cov_frobenius}, {"contrast", r.contrast}, {"n_b", r.n_b},
          {"n_gen", r.n_gen},         {"active_set", r.active_set}, {"warnings", r.warnings}};
}

nlohmann::ordered_json heatmap_summary_json(const Heatmap& h) {
  return {{"format_version", kFormatVersion},
          {"z_min", h.z_values.front()},
          {"z_max", h.z_values.back()},
          {"progress", h.progress},
          {"column_sums", h.column_mass},
          {"truncated_mass", h.truncated}};
}

}  // namespace countflow
