/*
 Copyright 2026 The octrans Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef OCTRANS_BENCH_BENCH_HPP_
#define OCTRANS_BENCH_BENCH_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "octrans/ipm/solver.hpp"
#include "octrans/transcribe/transcribe.hpp"

namespace octrans::bench {

using kernel::Index;

struct BenchCase {
  std::string name;
  std::string source;  // "embedded:<name>" or a file path
  transcribe::Scheme scheme = transcribe::Scheme::trapezoid;
  std::vector<Index> grids;          // strictly increasing
  std::vector<std::string> backends;  // "serial" / "parallel"
  std::optional<double> expected_objective;
  double tolerance = 1e-3;  // relative, for the expected-objective check
};

struct BenchRow {
  std::string case_name;
  Index grid = 0;
  std::string backend;
  ipm::SolveStatus status = ipm::SolveStatus::max_iter;
  double objective = 0.0;
  int iterations = 0;
  double wall_time = 0.0;
  double time_derivatives = 0.0, time_factorize = 0.0, time_solve = 0.0;
  Index nvar = 0, m_con = 0, kkt_nnz = 0, factor_nnz = 0;
  bool objective_ok = true;  // expected-objective check, when configured
};

struct BenchReport {
  std::vector<BenchRow> rows;
  bool all_optimal = true;
  bool all_checks_passed = true;
};

struct BenchConfig {
  std::vector<BenchCase> cases;
  int threads = 0;  // 0 = hardware default
  double tol = 1e-8;
  int max_iter = 3000;
  Index max_grid = 20000;  // default cap; lift with allow_large_grids
  bool allow_large_grids = false;
};

/// Built-in sweep over the three embedded problems.
BenchConfig default_config();

/// Key-value config file (see README for the format).
BenchConfig load_config(const std::string& path);

BenchReport run_bench(const BenchConfig& config, std::ostream& log);

void write_csv(const BenchReport& report, std::ostream& os);
void write_markdown(const BenchReport& report, std::ostream& os);
void write_gnuplot(const BenchReport& report, std::ostream& os);

/// Problem-size check fields: nvar + m_con against the documented targets
/// (about 10N for goddard, about 20N for quadrotor).
struct DimensionCheck {
  Index nvar = 0;
  Index m_con = 0;
  Index total = 0;
  bool has_target = false;
  Index target_center = 0;
  Index target_slack = 0;
  bool within_target = true;
};

DimensionCheck check_dimensions(const std::string& case_name, const dsl::OcpProblem& problem, Index N,
                                transcribe::Scheme scheme = transcribe::Scheme::trapezoid);

/// Reference objectives frozen from fine-grid self-consistency runs.
std::optional<double> reference_objective(const std::string& name);

}  // namespace octrans::bench

#endif  // OCTRANS_BENCH_BENCH_HPP_
