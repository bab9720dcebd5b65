// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "mersp/matrix_io.hpp"
#include "mersp/runner.hpp"

namespace {

using namespace mersp;

// exit codes: 0 ok, 2 parse/validation, 3 ill-posed, 4 numerical failure
constexpr int kExitParse = 2;
constexpr int kExitIllPosed = 3;
constexpr int kExitNumerical = 4;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw InvalidArgument("cannot write " + out_path);
  out << text;
}

std::vector<Strategy> parse_strategies(const std::string& spec) {
  std::vector<Strategy> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "all") {
      return {Strategy::Identity, Strategy::Diagonal, Strategy::Trace};
    } else if (tok == "id" || tok == "identity") {
      out.push_back(Strategy::Identity);
    } else if (tok == "di" || tok == "diagonal") {
      out.push_back(Strategy::Diagonal);
    } else if (tok == "tr" || tok == "trace") {
      out.push_back(Strategy::Trace);
    } else {
      throw InvalidArgument("unknown strategy " + tok);
    }
  }
  if (out.empty()) throw InvalidArgument("empty strategy set");
  return out;
}

Orientation parse_orientation(const std::string& s) {
  if (s == "auto") return Orientation::Auto;
  if (s == "original") return Orientation::Original;
  if (s == "complementary") return Orientation::Complementary;
  throw InvalidArgument("unknown orientation " + s);
}

DiagScaleMode parse_diag_scale(const std::string& s) {
  if (s == "none") return DiagScaleMode::None;
  if (s == "min-lam-diff") return DiagScaleMode::MinLamDiff;
  if (s == "min-lam-c2") return DiagScaleMode::MinLamC2;
  if (s == "optimize") return DiagScaleMode::Optimize;
  if (s == "best-of-three") return DiagScaleMode::BestOfThree;
  throw InvalidArgument("unknown diag-scale mode " + s);
}

InstanceKind parse_kind(const std::string& s) {
  if (s == "pd") return InstanceKind::Pd;
  if (s == "singular-cond7" || s == "singular") return InstanceKind::SingularCond7;
  if (s == "singular-maxpsi") return InstanceKind::SingularMaxPsi;
  throw InvalidArgument("unknown instance kind " + s);
}

// flag values shared by `bound` and `sweep`
struct BoundFlags {
  int s = 1;
  std::string strategy = "all";
  bool no_spectral = false;
  std::string orientation = "auto";
  bool augment = false;
  std::string diag_scale = "none";
  int gamma_grid = 50;
  bool exact = false;
  std::uint64_t seed = 0;
  std::string format = "csv";
  std::string out;
  std::string config_path;
  int threads = 0;
  int max_outer = 30;
  double gap_tol = 1e-6;
};

void add_bound_flags(CLI::App* cmd, BoundFlags* f, bool with_exact) {
  cmd->add_option("--s", f->s, "subset size (integer, 0 < s < n)");
  cmd->add_option("--strategy", f->strategy,
                  "comma list of id,di,tr or all (default all)");
  cmd->add_flag("--no-spectral", f->no_spectral, "skip the spectral bound");
  cmd->add_option("--orientation", f->orientation,
                  "auto | original | complementary");
  cmd->add_flag("--augment", f->augment, "also compute augmented bounds");
  cmd->add_option("--diag-scale", f->diag_scale,
                  "none | min-lam-diff | min-lam-c2 | optimize | best-of-three");
  cmd->add_option("--gamma-grid", f->gamma_grid, "grid points for gamma search");
  if (with_exact) {
    cmd->add_flag("--exact", f->exact, "also compute the exact optimum (guarded)");
  }
  cmd->add_option("--seed", f->seed, "random seed");
  cmd->add_option("--format", f->format, "csv | json");
  cmd->add_option("--out", f->out, "output path (default stdout)");
  cmd->add_option("--config", f->config_path, "JSON config file; flags override");
  cmd->add_option("--threads", f->threads, "worker threads (0 = hardware)");
  cmd->add_option("--max-outer", f->max_outer,
                  "outer iterations for the scaling optimizer");
  cmd->add_option("--gap-tol", f->gap_tol,
                  "certificate tolerance of the relaxation solver");
}

RunConfig make_run_config(const CLI::App* cmd, const BoundFlags& f) {
  RunConfig cfg;
  // config file first, explicit flags override below
  nlohmann::json j = nlohmann::json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw ParseError("cannot open " + f.config_path, 0);
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("config: ") + e.what(), 0);
    }
  }
  auto overridden = [&](const std::string& flag) {
    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    return opt && opt->count() > 0;
  };
  cfg.s = j.value("s", f.s);
  cfg.strategies = parse_strategies(j.value("strategy", f.strategy));
  cfg.spectral = !j.value("no_spectral", f.no_spectral);
  cfg.orientation = parse_orientation(j.value("orientation", f.orientation));
  cfg.augment = j.value("augment", f.augment);
  cfg.diag_scale = parse_diag_scale(j.value("diag_scale", f.diag_scale));
  cfg.gamma_grid = j.value("gamma_grid", f.gamma_grid);
  cfg.exact = j.value("exact", f.exact);
  cfg.seed = j.value("seed", f.seed);
  cfg.threads = j.value("threads", f.threads);
  cfg.max_outer = j.value("max_outer", f.max_outer);
  cfg.solver.gap_tol = j.value("gap_tol", f.gap_tol);
  if (overridden("--s")) cfg.s = f.s;
  if (overridden("--strategy")) cfg.strategies = parse_strategies(f.strategy);
  if (overridden("--no-spectral")) cfg.spectral = !f.no_spectral;
  if (overridden("--orientation")) cfg.orientation = parse_orientation(f.orientation);
  if (overridden("--augment")) cfg.augment = f.augment;
  if (overridden("--diag-scale")) cfg.diag_scale = parse_diag_scale(f.diag_scale);
  if (overridden("--gamma-grid")) cfg.gamma_grid = f.gamma_grid;
  if (overridden("--exact")) cfg.exact = f.exact;
  if (overridden("--seed")) cfg.seed = f.seed;
  if (overridden("--threads")) cfg.threads = f.threads;
  if (overridden("--max-outer")) cfg.max_outer = f.max_outer;
  if (overridden("--gap-tol")) cfg.solver.gap_tol = f.gap_tol;
  if (cfg.gamma_grid < 1) throw InvalidArgument("gamma grid must be >= 1");
  if (!(cfg.solver.gap_tol > 0.0)) {
    throw InvalidArgument("gap tolerance must be positive");
  }
  return cfg;
}

std::string render(const GapReport& report, const std::string& format) {
  if (format == "csv") return to_csv(report);
  if (format == "json") return to_json(report).dump(2) + "\n";
  throw InvalidArgument("unknown format " + format);
}

std::string subset_text(const SubsetSolution& sol) {
  std::ostringstream out;
  out << "value: " << detail::fmt_double(sol.value) << "\nindices (1-based):";
  for (int i : sol.s) out << ' ' << (i + 1);
  out << "\n";
  return out.str();
}

int dispatch(int argc, char** argv) {
  CLI::App app{
      "certified upper and heuristic lower bounds for maximum-entropy "
      "remote sampling"};
  app.require_subcommand(1);

  auto* bound_cmd = app.add_subcommand("bound", "compute certified upper bounds");
  std::string bound_path;
  BoundFlags bf;
  bound_cmd->add_option("matrix", bound_path, "covariance file")->required();
  add_bound_flags(bound_cmd, &bf, true);

  auto* lower_cmd = app.add_subcommand("lower", "heuristic lower bound");
  std::string lower_path;
  int lower_s = 1;
  lower_cmd->add_option("matrix", lower_path, "covariance file")->required();
  lower_cmd->add_option("--s", lower_s, "subset size")->required();

  auto* exact_cmd = app.add_subcommand("exact", "exact optimum by enumeration");
  std::string exact_path;
  int exact_s = 1;
  int exact_threads = 0;
  exact_cmd->add_option("matrix", exact_path, "covariance file")->required();
  exact_cmd->add_option("--s", exact_s, "subset size")->required();
  exact_cmd->add_option("--threads", exact_threads, "worker threads");

  auto* check_cmd = app.add_subcommand("check", "instance diagnostics");
  std::string check_path;
  check_cmd->add_option("matrix", check_path, "covariance file")->required();

  auto* gen_cmd = app.add_subcommand("gen", "generate a covariance file");
  std::string gen_kind = "pd", gen_out;
  int gen_n = 8, gen_t = 2, gen_rank = 0;
  std::uint64_t gen_seed = 1;
  gen_cmd->add_option("--kind", gen_kind, "pd | singular-cond7 | singular-maxpsi");
  gen_cmd->add_option("--n", gen_n, "observable count")->required();
  gen_cmd->add_option("--t", gen_t, "target count")->required();
  gen_cmd->add_option("--rank", gen_rank, "rank for the singular kinds");
  gen_cmd->add_option("--seed", gen_seed, "random seed");
  gen_cmd->add_option("--out", gen_out, "output file (default stdout)");

  auto* sweep_cmd = app.add_subcommand("sweep", "bounds over a range of t");
  BoundFlags sf;
  std::string sweep_kind = "pd", sweep_dir = ".";
  int sweep_n = 8, sweep_tlo = 1, sweep_thi = 4, sweep_rank = 0;
  sweep_cmd->add_option("--kind", sweep_kind,
                        "pd | singular-cond7 | singular-maxpsi");
  sweep_cmd->add_option("--n", sweep_n, "observable count")->required();
  sweep_cmd->add_option("--t-min", sweep_tlo, "first t")->required();
  sweep_cmd->add_option("--t-max", sweep_thi, "last t")->required();
  sweep_cmd->add_option("--rank", sweep_rank, "rank for the singular kinds");
  sweep_cmd->add_option("--out-dir", sweep_dir, "directory for per-t CSV files");
  add_bound_flags(sweep_cmd, &sf, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  if (bound_cmd->parsed()) {
    CovarianceInstance cov = read_covariance(bound_path);
    RunConfig cfg = make_run_config(bound_cmd, bf);
    cfg.instance_id = std::filesystem::path(bound_path).stem().string();
    GapReport report = run_bounds(cov, cfg);
    emit(render(report, bf.format), bf.out);
    if (!report.failed_bounds.empty()) {
      std::cerr << "numerical failure in:";
      for (const auto& b : report.failed_bounds) std::cerr << ' ' << b;
      std::cerr << "\n";
      return kExitNumerical;
    }
    return 0;
  }
  if (lower_cmd->parsed()) {
    CovarianceInstance cov = read_covariance(lower_path);
    MerspInstance inst = build_mersp(cov, lower_s);
    emit(subset_text(local_search(inst, greedy(inst))), "");
    return 0;
  }
  if (exact_cmd->parsed()) {
    CovarianceInstance cov = read_covariance(exact_path);
    MerspInstance inst = build_mersp(cov, exact_s);
    emit(subset_text(brute_force(inst, exact_threads)), "");
    return 0;
  }
  if (check_cmd->parsed()) {
    CovarianceInstance cov = read_covariance(check_path);
    emit(format_check(check_instance(cov)), "");
    return 0;
  }
  if (gen_cmd->parsed()) {
    CovarianceInstance cov =
        generate(parse_kind(gen_kind), gen_n, gen_t, gen_rank, gen_seed);
    if (gen_out.empty()) {
      std::cout << format_covariance(cov);
    } else {
      write_covariance(gen_out, cov);
    }
    return 0;
  }
  if (sweep_cmd->parsed()) {
    SweepConfig cfg;
    cfg.kind = parse_kind(sweep_kind);
    cfg.n = sweep_n;
    cfg.t_lo = sweep_tlo;
    cfg.t_hi = sweep_thi;
    cfg.rank = sweep_rank;
    cfg.seed = sf.seed;
    cfg.run = make_run_config(sweep_cmd, sf);
    cfg.run.instance_id = sweep_kind;
    std::filesystem::create_directories(sweep_dir);
    auto results = sweep(cfg);
    for (const auto& [t, report] : results) {
      const std::string path = sweep_dir + "/sweep_t" + std::to_string(t) + ".csv";
      emit(to_csv(report), path);
      std::cout << path << "\n";
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const mersp::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const mersp::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const mersp::NotPositiveDefinite& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const mersp::TooLarge& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const mersp::IllPosed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIllPosed;
  } catch (const mersp::Infeasible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIllPosed;
  } catch (const mersp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
