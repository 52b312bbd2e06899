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

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "octrans/bench/bench.hpp"
#include "octrans/bench/problems.hpp"
#include "octrans/dsl/parser.hpp"
#include "octrans/dsl/printer.hpp"
#include "octrans/ipm/solver.hpp"
#include "octrans/transcribe/transcribe.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolverFailure = 1;
constexpr int kExitInputError = 2;

std::string read_source(const std::string& path) {
  if (const char* text = octrans::bench::embedded_source(path)) return text;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SolveArgs {
  std::string file;
  std::string scheme = "trapezoid";
  long grid_size = 250;
  std::string backend = "serial";
  int threads = 0;
  double tol = 1e-8;
  int max_iter = 3000;
  bool verbose = false;
  std::string json_path;
  std::string dump_nlp;
  std::string dump_kkt;
};

int run_solve(const SolveArgs& args) {
  octrans::dsl::OcpProblem problem;
  try {
    problem = octrans::dsl::parse_ocp(read_source(args.file));
  } catch (const octrans::dsl::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  auto scheme = args.scheme == "euler" ? octrans::transcribe::Scheme::euler
                                       : octrans::transcribe::Scheme::trapezoid;
  auto nlp = octrans::transcribe::transcribe(problem, scheme, args.grid_size);
  if (!args.dump_nlp.empty()) {
    std::ofstream os(args.dump_nlp);
    nlp.dump(os);
  }

  octrans::backend::Backend backend(octrans::backend::Backend::parse_kind(args.backend), args.threads);
  octrans::ipm::IpmOptions opts;
  opts.tol = args.tol;
  opts.max_iter = args.max_iter;
  opts.verbose = args.verbose;
  opts.dump_kkt = args.dump_kkt;

  auto sol = octrans::ipm::solve(nlp, opts, backend);
  std::cout << "status:     " << octrans::ipm::status_name(sol.status) << "\n";
  if (!sol.message.empty()) std::cout << "message:    " << sol.message << "\n";
  std::cout << "objective:  " << octrans::dsl::format_number(sol.objective) << "\n";
  std::cout << "iterations: " << sol.iterations << "\n";
  std::cout << "residuals:  theta " << sol.theta << ", stationarity " << sol.stationarity
            << ", complementarity " << sol.complementarity << "\n";
  std::cout << "time:       " << sol.stats.time_total << " s (derivatives " << sol.stats.time_derivatives
            << ", factorize " << sol.stats.time_factorize << ", solves " << sol.stats.time_solve << ")\n";

  if (!args.json_path.empty()) {
    std::ofstream os(args.json_path);
    sol.write_json(os);
  }
  return sol.status == octrans::ipm::SolveStatus::optimal ? kExitOk : kExitSolverFailure;
}

int run_check(const std::string& file, bool print_canonical) {
  try {
    auto problem = octrans::dsl::parse_ocp(read_source(file));
    std::cout << "ok: " << problem.state_dim() << " state(s), " << problem.control_dim()
              << " control(s), " << problem.variable_dim() << " free variable(s), "
              << problem.constraints.size() << " constraint declaration(s)\n";
    if (print_canonical) std::cout << octrans::dsl::pretty_print(problem);
    return kExitOk;
  } catch (const octrans::dsl::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

struct BenchArgs {
  std::string config;
  std::string csv;
  std::string markdown;
  std::string gnuplot;
  int threads = 0;
  bool allow_large = false;
};

int run_bench_cmd(const BenchArgs& args) {
  try {
    octrans::bench::BenchConfig cfg =
        args.config.empty() ? octrans::bench::default_config() : octrans::bench::load_config(args.config);
    if (args.threads > 0) cfg.threads = args.threads;
    cfg.allow_large_grids |= args.allow_large;

    auto report = octrans::bench::run_bench(cfg, std::cout);
    if (!args.csv.empty()) {
      std::ofstream os(args.csv);
      octrans::bench::write_csv(report, os);
    }
    if (!args.markdown.empty()) {
      std::ofstream os(args.markdown);
      octrans::bench::write_markdown(report, os);
    } else {
      std::cout << "\n";
      octrans::bench::write_markdown(report, std::cout);
    }
    if (!args.gnuplot.empty()) {
      std::ofstream os(args.gnuplot);
      octrans::bench::write_gnuplot(report, os);
    }
    return report.all_optimal && report.all_checks_passed ? kExitOk : kExitSolverFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"octrans: optimal-control transcription and interior-point solving"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "transcribe and solve a .ocp model");
  solve->add_option("file", solve_args.file, "model file (or embedded name: double_integrator, goddard, quadrotor)")
      ->required();
  solve->add_option("--scheme", solve_args.scheme, "discretization scheme")
      ->check(CLI::IsMember({"euler", "trapezoid"}));
  solve->add_option("--grid-size,-N", solve_args.grid_size, "number of grid steps")->check(CLI::PositiveNumber);
  solve->add_option("--backend", solve_args.backend, "evaluation backend")
      ->check(CLI::IsMember({"serial", "parallel"}));
  solve->add_option("--threads", solve_args.threads, "worker count for the parallel backend");
  solve->add_option("--tol", solve_args.tol, "convergence tolerance");
  solve->add_option("--max-iter", solve_args.max_iter, "iteration limit");
  solve->add_flag("--verbose", solve_args.verbose, "one log line per interior-point iteration");
  solve->add_option("--json", solve_args.json_path, "write the final report as JSON");
  solve->add_option("--dump-nlp", solve_args.dump_nlp, "write the transcribed problem debug dump");
  solve->add_option("--dump-kkt", solve_args.dump_kkt, "write the first KKT matrix (Matrix Market)");

  std::string check_file;
  bool check_print = false;
  auto* check = app.add_subcommand("check", "parse and validate a model, reporting errors");
  check->add_option("file", check_file, "model file or embedded name")->required();
  check->add_flag("--print", check_print, "print the canonical form after validation");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "run the benchmark sweep");
  bench->add_option("--config", bench_args.config, "bench config file (key = value format)");
  bench->add_option("--csv", bench_args.csv, "write results as CSV");
  bench->add_option("--md", bench_args.markdown, "write results as a markdown table");
  bench->add_option("--gnuplot", bench_args.gnuplot, "write grid-size vs wall-time data");
  bench->add_option("--threads", bench_args.threads, "worker count for parallel backends");
  bench->add_flag("--allow-large-grids", bench_args.allow_large, "lift the default grid-size cap");

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) return run_solve(solve_args);
  if (check->parsed()) return run_check(check_file, check_print);
  if (bench->parsed()) return run_bench_cmd(bench_args);
  return kExitInputError;
}
