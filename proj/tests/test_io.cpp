#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "countflow/io.hpp"
#include "support.hpp"

using namespace countflow;

namespace {

CountMatrix parse(const std::string& text) {
  std::istringstream in(text);
  return read_count_csv(in, "mem");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("count CSV round trip") {
  Rng r = make_stream(1, 0);
  CountMatrix m = testing_support::random_counts(50, 3, 1000, r);
  std::ostringstream out;
  write_count_csv(out, m);
  CHECK(out.str().rfind("x_1,x_2,x_3\n", 0) == 0);
  const CountMatrix back = parse(out.str());
  CHECK(back.rows == 50);
  CHECK(back.cols == 3);
  CHECK(back.data == m.data);
  CHECK_FALSE(back.has_labels());

  m.labels.assign(50, 2);
  m.labels[3] = -1;
  std::ostringstream lab;
  write_count_csv(lab, m);
  CHECK(lab.str().rfind("x_1,x_2,x_3,label\n", 0) == 0);
  const CountMatrix lb = parse(lab.str());
  CHECK(lb.labels == m.labels);

  const auto path = std::filesystem::temp_directory_path() / "countflow_io_test.csv";
  write_count_csv(path, m);
  const CountMatrix fb = read_count_csv(path);
  CHECK(fb.data == m.data);
  CHECK(fb.labels == m.labels);
  std::filesystem::remove(path);
}

TEST_CASE("count CSV tolerates comments, blank lines, CRLF and spaces") {
  const CountMatrix m = parse("# produced elsewhere\n\nx_1, x_2\r\n3, 4\r\n\n# note\n0,7\n");
  CHECK(m.rows == 2);
  CHECK(m.data == std::vector<Count>{3, 4, 0, 7});
  const CountMatrix empty = parse("x_1,x_2\n");
  CHECK(empty.rows == 0);
  CHECK(empty.cols == 2);
}

TEST_CASE("malformed count CSV reports the line") {
  CHECK(error_of("") == "mem:0: missing header row");
  CHECK(error_of("a,b\n1,2\n").find("mem:1:") == 0);
  CHECK(error_of("x_1,x_3\n").find("expected header column 'x_2'") != std::string::npos);
  CHECK(error_of("x_1,x_2\n1,2\n3\n").find("mem:3: expected 2 fields, found 1") == 0);
  CHECK(error_of("x_1,x_2\n1,2\n\n4,x\n").find("mem:4: column 2") == 0);
  CHECK(error_of("x_1\n-3\n").find("mem:2: column 1: negative count") == 0);
  CHECK(error_of("x_1\n2.5\n").find("mem:2:") == 0);
  CHECK(error_of("x_1,label\n1,-2\n").find("mem:2: label") == 0);
  CHECK(error_of("label\n").find("no count columns") != std::string::npos);
  CHECK_THROWS_AS(read_count_csv(std::filesystem::path("/nonexistent/countflow.csv")), IoError);
}

TEST_CASE("format_real round trips") {
  for (double v : {0.0, 1.0, 0.1, 1e-300, 123456.789, -2.5e-8, 1.0 / 3.0}) {
    CHECK(std::stod(format_real(v)) == v);
  }
  CHECK(format_real(0.5) == "0.5");
  CHECK(format_real(3.0) == "3");
}

TEST_CASE("loss, trajectory and heatmap writers") {
  std::ostringstream loss;
  write_loss_csv(loss, {{0, 1.5, 2.0}, {1, 0.25, 0.0}});
  CHECK(loss.str() == "step,loss,coupling_cost\n0,1.5,2\n1,0.25,0\n");

  Trajectory tr;
  tr.steps = {0, 5};
  tr.times = {0.001, 0.5};
  tr.states = {CountVector{1, 2}, CountVector{2, 2}};
  std::ostringstream traj;
  write_trajectory_header(traj, 2);
  write_trajectory(traj, 7, tr);
  CHECK(traj.str() == "sample_id,step,t,x_1,x_2\n7,0,0.001,1,2\n7,5,0.5,2,2\n");

  Heatmap h;
  h.z_values = {0, 1};
  h.progress = {0.0, 0.5};
  h.prob = {1.0, 0.5, 0.0, 0.25};
  h.column_mass = {1.0, 0.75};
  h.truncated = {0.0, 0.25};
  std::ostringstream hm;
  write_heatmap_csv(hm, h);
  CHECK(hm.str() == "z,s=0,s=0.5\n0,1,0.5\n1,0,0.25\n");
  const auto summary = heatmap_summary_json(h);
  CHECK(summary["format_version"] == kFormatVersion);
  CHECK(summary["column_sums"][1] == 0.75);
  CHECK(summary["truncated_mass"][1] == 0.25);
  CHECK(summary["z_min"] == 0);
  CHECK(summary["z_max"] == 1);
}

TEST_CASE("report JSON keys") {
  MetricReport m{1.5, 0.01, 3.0, 10, 20, 4};
  const auto j = to_json(m);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"w2", "mmd2_rbf", "bandwidth", "n_source", "n_target", "seed"});
  CHECK(j["bandwidth"] == 3.0);

  ConditionalReport c;
  c.rmse_mu = 1;
  c.active_set = {0, 2};
  c.warnings = {"w"};
  const auto cj = to_json(c);
  for (const char* k : {"rmse_mu", "rmse_var", "rmse_zero", "cov_f", "contrast", "n_b", "active_set", "warnings"}) {
    CHECK(cj.contains(k));
  }
  CHECK(cj["active_set"] == nlohmann::ordered_json::array({0, 2}));
}
