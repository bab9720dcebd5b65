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

#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mersp/diag_scaling.hpp"
#include "mersp/errors.hpp"
#include "mersp/generate.hpp"
#include "mersp/instance.hpp"
#include "mersp/nlp.hpp"
#include "mersp/spectral.hpp"
#include "mersp/subset_search.hpp"
#include "mersp/sym_matrix.hpp"

namespace mersp {

enum class Orientation { Auto, Original, Complementary };
enum class DiagScaleMode { None, MinLamDiff, MinLamC2, Optimize, BestOfThree };
enum class OutputFormat { Csv, Json };

struct RunConfig {
  int s = 1;
  std::vector<Strategy> strategies = {Strategy::Identity, Strategy::Diagonal,
                                      Strategy::Trace};
  bool spectral = true;
  Orientation orientation = Orientation::Auto;
  bool augment = false;
  DiagScaleMode diag_scale = DiagScaleMode::None;
  int gamma_grid = 50;
  bool exact = false;
  std::uint64_t seed = 0;
  SolverOptions solver;
  TraceOptions trace;
  MinLam1Options min_lam1;
  SpectralOptions spectral_opts;
  int max_outer = 30;
  int threads = 0;
  std::string instance_id = "instance";
};

/// One bound per row; optional fields stay empty in the CSV. Column order is
/// fixed: instance_id, n, t, s, bound, strategy, psi, gamma, psi_source,
/// upper, fw_gap, lower, gap, delta, wall_ms.
struct GapRow {
  std::string instance_id;
  int n = 0, t = 0, s = 0;
  std::string bound;
  std::string strategy;
  std::optional<double> psi;
  std::optional<double> gamma;
  std::string psi_source;
  double upper = 0.0;
  std::optional<double> fw_gap;
  double lower = 0.0;
  double gap = 0.0;
  std::optional<double> delta;
  double wall_ms = 0.0;
  std::optional<Vector> x_hat;   // json only
  std::optional<Vector> eta_hat;
  std::optional<Vector> psi_vec;
};

struct GapReport {
  std::string instance_id;
  int n = 0, t = 0, s = 0;
  std::vector<GapRow> rows;
  SubsetSolution lower;
  std::optional<SubsetSolution> exact;
  std::vector<std::string> failed_bounds;  // bounds that died numerically
};

namespace detail {

struct Candidate {
  const MerspInstance* inst;
  double psi;  // scaling actually applied (1 for the plain bound)
  bool augment;
};

inline double now_ms() {
  return std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace detail

/// Computes the requested certified upper bounds, the heuristic lower bound
/// and optionally the exact optimum. In the auto orientation, log-det bounds
/// run complementary whenever the covariance is positive definite and in the
/// original orientation whenever a positive augmentation scaling exists;
/// when both apply the smaller bound is reported. Numerical failures are
/// recorded per bound and leave the other rows intact.
inline GapReport run_bounds(const CovarianceInstance& cov,
                            const RunConfig& config) {
  GapReport report;
  report.instance_id = config.instance_id;
  report.n = cov.n();
  report.t = cov.t();
  report.s = config.s;

  MerspInstance inst = build_mersp(cov, config.s);
  try {
    report.lower = local_search(inst, greedy(inst));
  } catch (const Infeasible&) {
    throw IllPosed("run_bounds: no well-posed subset of the requested size");
  }
  const double lower = report.lower.value;

  const bool pd = is_psd(cov.c(), true);
  const bool cond = well_posedness_condition(cov);
  const bool want_orig = config.orientation != Orientation::Complementary;
  const bool want_comp = config.orientation != Orientation::Original;
  std::optional<MerspInstance> comp;
  std::optional<PsiStar> psi_orig, psi_comp;
  if (pd) {
    comp = complement(inst);
    psi_comp = psi_star(cov, PsiMode::Complementary);
  }
  if (cond) psi_orig = psi_star(cov, PsiMode::Original);
  const bool plain_orig_ok = is_psd(inst.c2() - inst.c1(), false);

  auto base_row = [&](const std::string& bound, const std::string& strat) {
    GapRow row;
    row.instance_id = config.instance_id;
    row.n = cov.n();
    row.t = cov.t();
    row.s = config.s;
    row.bound = bound;
    row.strategy = strat;
    row.lower = lower;
    return row;
  };

  if (config.spectral && pd && want_orig) {
    const double t0 = detail::now_ms();
    GapRow row = base_row("spectral", "");
    try {
      SpectralResult sres = minimize_spectral(inst, config.spectral_opts);
      row.upper = sres.value;
      row.gap = sres.value - lower;
      row.delta = sres.delta;
      row.eta_hat = sres.eta_hat;
      row.wall_ms = detail::now_ms() - t0;
      report.rows.push_back(std::move(row));
    } catch (const NumericalFailure&) {
      report.failed_bounds.push_back("spectral");
    }
  }

  auto solve_candidates = [&](Strategy strategy,
                              const std::vector<detail::Candidate>& cands)
      -> std::optional<BoundResult> {
    std::optional<BoundResult> best;
    for (const auto& c : cands) {
      NlpBoundOptions opts;
      opts.strategy = strategy;
      opts.augment = c.augment;
      if (c.augment) opts.psi = c.psi;
      opts.gamma_grid = config.gamma_grid;
      opts.solver = config.solver;
      opts.trace = config.trace;
      opts.threads = config.threads;
      BoundResult res = nlp_bound(*c.inst, opts);
      if (!best || res.value < best->value) best = std::move(res);
    }
    return best;
  };

  for (Strategy strategy : config.strategies) {
    const std::string strat = strategy_name(strategy);

    // plain log-det bound
    {
      std::vector<detail::Candidate> cands;
      if (comp && want_comp) cands.push_back({&*comp, 1.0, false});
      if (plain_orig_ok && want_orig) cands.push_back({&inst, 1.0, false});
      if (!cands.empty()) {
        const double t0 = detail::now_ms();
        GapRow row = base_row("nlp", strat);
        try {
          auto best = solve_candidates(strategy, cands);
          row.upper = best->value;
          row.gap = best->value - lower;
          row.fw_gap = best->fw_gap;
          row.psi = best->params.psi;
          row.gamma = best->params.gamma;
          row.x_hat = best->x_hat;
          row.wall_ms = detail::now_ms() - t0;
          report.rows.push_back(std::move(row));
        } catch (const NumericalFailure&) {
          report.failed_bounds.push_back("nlp-" + strat);
        } catch (const DegenerateInstance&) {
          report.failed_bounds.push_back("nlp-" + strat);
        }
      }
    }

    // augmented bound with the optimal scaling
    if (config.augment) {
      std::vector<detail::Candidate> cands;
      if (comp && psi_comp && want_comp) {
        cands.push_back({&*comp, psi_comp->safe_value(), true});
      }
      if (psi_orig && want_orig) {
        cands.push_back({&inst, psi_orig->safe_value(), true});
      }
      if (!cands.empty()) {
        const double t0 = detail::now_ms();
        GapRow row = base_row("nlp-aug", strat);
        try {
          auto best = solve_candidates(strategy, cands);
          row.upper = best->value;
          row.gap = best->value - lower;
          row.fw_gap = best->fw_gap;
          row.psi = best->params.psi;
          row.gamma = best->params.gamma;
          row.x_hat = best->x_hat;
          row.wall_ms = detail::now_ms() - t0;
          report.rows.push_back(std::move(row));
        } catch (const NumericalFailure&) {
          report.failed_bounds.push_back("nlp-aug-" + strat);
        } catch (const DegenerateInstance&) {
          report.failed_bounds.push_back("nlp-aug-" + strat);
        }
      }
    }

    // diagonally rescaled bound
    if (config.diag_scale != DiagScaleMode::None) {
      // preferred orientation: complementary when available
      const MerspInstance* oriented = nullptr;
      double psi_val = 1.0;
      bool aug = false;
      if (comp && want_comp) {
        oriented = &*comp;
        aug = config.augment && psi_comp.has_value();
        psi_val = aug ? psi_comp->safe_value() : 1.0;
      } else if (want_orig && config.augment && psi_orig) {
        oriented = &inst;
        aug = true;
        psi_val = psi_orig->safe_value();
      } else if (want_orig && plain_orig_ok) {
        oriented = &inst;
      }
      if (oriented) {
        const std::string name = aug ? "nlp-aug-diag" : "nlp-diag";
        const double t0 = detail::now_ms();
        GapRow row = base_row(name, strat);
        try {
          DiagScaleOptions dopts;
          dopts.max_outer = config.max_outer;
          dopts.psi = psi_val;
          dopts.gamma_grid = config.gamma_grid;
          dopts.solver = config.solver;
          dopts.trace = config.trace;
          dopts.min_lam1 = config.min_lam1;
          dopts.threads = config.threads;
          PsiOptimizeResult res;
          if (config.diag_scale == DiagScaleMode::BestOfThree ||
              (config.diag_scale == DiagScaleMode::Optimize &&
               strategy != Strategy::Identity)) {
            res = best_of_three(*oriented, strategy, dopts);
          } else if (config.diag_scale == DiagScaleMode::Optimize) {
            res = optimize_psi_nlp_id(
                *oriented, select_psi(*oriented, PsiSource::Unit), dopts);
          } else {
            const PsiSource src = config.diag_scale == DiagScaleMode::MinLamDiff
                                      ? PsiSource::MinLamDiff
                                      : PsiSource::MinLamC2;
            res.scaling = select_psi(*oriented, src, dopts.min_lam1);
            NlpBoundOptions nb;
            nb.strategy = strategy;
            nb.augment = aug;
            if (aug) nb.psi = psi_val;
            nb.gamma_grid = config.gamma_grid;
            nb.solver = config.solver;
            nb.trace = config.trace;
            nb.threads = config.threads;
            res.bound =
                nlp_bound(apply_diag_scaling(*oriented, res.scaling.psi_vec), nb);
          }
          row.upper = res.bound.value;
          row.gap = res.bound.value - lower;
          row.fw_gap = res.bound.fw_gap;
          row.psi = res.bound.params.psi;
          row.gamma = res.bound.params.gamma;
          row.psi_source = psi_source_name(res.scaling.source);
          row.psi_vec = res.scaling.psi_vec;
          row.x_hat = res.bound.x_hat;
          row.wall_ms = detail::now_ms() - t0;
          report.rows.push_back(std::move(row));
        } catch (const NumericalFailure&) {
          report.failed_bounds.push_back(name + "-" + strat);
        } catch (const DomainError&) {
          report.failed_bounds.push_back(name + "-" + strat);
        }
      }
    }
  }

  if (report.rows.empty()) {
    throw IllPosed("run_bounds: no bound is applicable to this instance");
  }

  if (config.exact) {
    const double t0 = detail::now_ms();
    SubsetSolution ex = brute_force(inst, config.threads);
    GapRow row = base_row("exact", "");
    row.upper = ex.value;
    row.gap = ex.value - lower;
    row.wall_ms = detail::now_ms() - t0;
    report.rows.push_back(std::move(row));
    report.exact = std::move(ex);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report rendering.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt_double(*v) : std::string();
}

}  // namespace detail

inline std::string to_csv(const GapReport& report, bool with_timing = true) {
  std::ostringstream out;
  out << "instance_id,n,t,s,bound,strategy,psi,gamma,psi_source,upper,fw_gap,"
         "lower,gap,delta,wall_ms\n";
  for (const GapRow& r : report.rows) {
    out << r.instance_id << ',' << r.n << ',' << r.t << ',' << r.s << ','
        << r.bound << ',' << r.strategy << ',' << detail::fmt_opt(r.psi) << ','
        << detail::fmt_opt(r.gamma) << ',' << r.psi_source << ','
        << detail::fmt_double(r.upper) << ',' << detail::fmt_opt(r.fw_gap) << ','
        << detail::fmt_double(r.lower) << ',' << detail::fmt_double(r.gap) << ','
        << detail::fmt_opt(r.delta) << ','
        << (with_timing ? detail::fmt_double(r.wall_ms) : std::string()) << "\n";
  }
  return out.str();
}

inline nlohmann::json to_json(const GapReport& report) {
  nlohmann::json j;
  j["instance"] = {{"id", report.instance_id},
                   {"n", report.n},
                   {"t", report.t},
                   {"s", report.s}};
  auto subset_json = [](const SubsetSolution& sol) {
    std::vector<int> one_based;
    for (int i : sol.s) one_based.push_back(i + 1);
    return nlohmann::json{{"indices", one_based}, {"value", sol.value}};
  };
  j["lower"] = subset_json(report.lower);
  if (report.exact) j["exact"] = subset_json(*report.exact);
  if (!report.failed_bounds.empty()) j["failed_bounds"] = report.failed_bounds;
  j["rows"] = nlohmann::json::array();
  for (const GapRow& r : report.rows) {
    nlohmann::json row;
    row["instance_id"] = r.instance_id;
    row["n"] = r.n;
    row["t"] = r.t;
    row["s"] = r.s;
    row["bound"] = r.bound;
    row["strategy"] = r.strategy;
    if (r.psi) row["psi"] = *r.psi;
    if (r.gamma) row["gamma"] = *r.gamma;
    if (!r.psi_source.empty()) row["psi_source"] = r.psi_source;
    row["upper"] = r.upper;
    if (r.fw_gap) row["fw_gap"] = *r.fw_gap;
    row["lower"] = r.lower;
    row["gap"] = r.gap;
    if (r.delta) row["delta"] = *r.delta;
    row["wall_ms"] = r.wall_ms;
    auto vec_json = [](const Vector& v) {
      return std::vector<double>(v.data(), v.data() + v.size());
    };
    if (r.x_hat) row["x_hat"] = vec_json(*r.x_hat);
    if (r.eta_hat) row["eta_hat"] = vec_json(*r.eta_hat);
    if (r.psi_vec) row["psi_vec"] = vec_json(*r.psi_vec);
    j["rows"].push_back(std::move(row));
  }
  return j;
}

// ---------------------------------------------------------------------------
// Instance diagnostics.
// ---------------------------------------------------------------------------

struct CheckReport {
  int n = 0, t = 0;
  int rank_c = 0, rank_obs = 0, rank_cross = 0;
  bool target_pd = false;
  bool condition = false;
  std::optional<double> psi_orig;
  std::optional<double> psi_comp;
  std::string verdict;
};

inline CheckReport check_instance(const CovarianceInstance& cov) {
  CheckReport rep;
  rep.n = cov.n();
  rep.t = cov.t();
  rep.rank_c = rank_psd(cov.c());
  rep.rank_obs = rank_psd(cov.observable_block());
  rep.rank_cross = rank_general(cov.cross_block());
  rep.target_pd = is_psd(cov.target_block(), true);
  rep.condition = well_posedness_condition(cov);
  if (rep.condition) rep.psi_orig = psi_star(cov, PsiMode::Original).value;
  if (is_psd(cov.c(), true)) {
    rep.psi_comp = psi_star(cov, PsiMode::Complementary).value;
  }
  if (rep.condition) {
    rep.verdict = "guaranteed for every 0 < s < n";
  } else if (rep.rank_obs < cov.n()) {
    rep.verdict = "fails at s = " + std::to_string(rep.rank_obs);
  } else {
    rep.verdict = "unverified";
  }
  return rep;
}

inline std::string format_check(const CheckReport& rep) {
  std::ostringstream out;
  out << "n: " << rep.n << "\n";
  out << "t: " << rep.t << "\n";
  out << "rank(C): " << rep.rank_c << "\n";
  out << "rank(C[N,N]): " << rep.rank_obs << "\n";
  out << "rank(C[N,T]): " << rep.rank_cross << "\n";
  out << "C[T,T] positive definite: " << (rep.target_pd ? "yes" : "no") << "\n";
  out << "well-posedness condition: " << (rep.condition ? "PASS" : "FAIL") << "\n";
  out << "psi* (original): "
      << (rep.psi_orig ? detail::fmt_double(*rep.psi_orig) : "n/a") << "\n";
  out << "psi* (complementary): "
      << (rep.psi_comp ? detail::fmt_double(*rep.psi_comp) : "n/a") << "\n";
  out << "well-posedness: " << rep.verdict << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Sweeps over the target-set size.
// ---------------------------------------------------------------------------

struct SweepConfig {
  InstanceKind kind = InstanceKind::Pd;
  int n = 8;
  int t_lo = 1;
  int t_hi = 4;
  int rank = 0;  // 0: min(n + t - 1, s + t + 2) for the singular kinds
  std::uint64_t seed = 1;
  RunConfig run;
};

inline int sweep_rank_rule(const SweepConfig& cfg, int t) {
  if (cfg.rank > 0) return cfg.rank;
  return std::min(cfg.n + t - 1, cfg.run.s + t + 2);
}

inline std::vector<std::pair<int, GapReport>> sweep(const SweepConfig& cfg) {
  std::vector<std::pair<int, GapReport>> out;
  for (int t = cfg.t_lo; t <= cfg.t_hi; ++t) {
    CovarianceInstance cov =
        generate(cfg.kind, cfg.n, t, sweep_rank_rule(cfg, t),
                 detail::mix_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    RunConfig run = cfg.run;
    run.instance_id = cfg.run.instance_id + "_t" + std::to_string(t);
    out.emplace_back(t, run_bounds(cov, run));
  }
  return out;
}

}  // namespace mersp
