#pragma once

// Text formats: count-matrix CSV (header x_1..x_d, optional label column),
// loss traces, trajectories, heatmaps, and JSON forms of the metric reports.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "countflow/eval.hpp"
#include "countflow/rates.hpp"
#include "countflow/train.hpp"
#include "countflow/types.hpp"

namespace countflow {

inline constexpr int kFormatVersion = 1;

/// Malformed input file; the message names the source and line.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input or output file cannot be opened or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Blank lines and lines starting with '#' are skipped. The first remaining
/// line must be the header.
CountMatrix read_count_csv(std::istream& in, const std::string& source_name = "<stream>");
CountMatrix read_count_csv(const std::filesystem::path& path);
void write_count_csv(std::ostream& out, const CountMatrix& m);
void write_count_csv(const std::filesystem::path& path, const CountMatrix& m);

void write_loss_csv(std::ostream& out, const std::vector<StepRecord>& trace);

/// Columns sample_id,step,t,x_1..x_d.
void write_trajectory_header(std::ostream& out, std::size_t dim);
void write_trajectory(std::ostream& out, std::size_t sample_id, const Trajectory& trajectory);

/// Rows are count values, columns progress values: z,s=<s0>,s=<s1>,...
void write_heatmap_csv(std::ostream& out, const Heatmap& h);

/// Shortest decimal that round-trips the double.
std::string format_real(double v);

nlohmann::ordered_json to_json(const MetricReport& r);
nlohmann::ordered_json to_json(const ConditionalReport& r);
nlohmann::ordered_json heatmap_summary_json(const Heatmap& h);

}  // namespace countflow
