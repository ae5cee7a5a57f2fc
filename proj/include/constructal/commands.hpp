/*
 Copyright 2026 The constructal Authors

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

// Subcommands behind the command-line tool. Each one validates, computes
// every output in memory, and only then writes files, so a failing run
// leaves no partial output. Exit codes: 0 pass, 1 quantitative failure,
// 2 configuration or I/O error.

#ifndef CONSTRUCTAL_COMMANDS_HPP
#define CONSTRUCTAL_COMMANDS_HPP

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "constructal/analysis.hpp"
#include "constructal/config.hpp"
#include "constructal/dynamics.hpp"
#include "constructal/report.hpp"

namespace constructal {

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2 };

inline constexpr double kTableTolerance = 1e-6;
inline constexpr double kFinalGapTolerance = 1e-6;
inline constexpr double kRateFraction = 0.95;
inline constexpr double kZeroSeparation = 1e-14;

using OutputFiles = std::vector<std::pair<std::string, std::string>>;

namespace detail {

inline int write_outputs(const std::filesystem::path& dir, const OutputFiles& files, std::ostream& err) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    err << "error: cannot create output directory " << dir << ": " << ec.message() << "\n";
    return kExitConfig;
  }
  for (const auto& [name, content] : files) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
      err << "error: cannot write " << (dir / name) << "\n";
      return kExitConfig;
    }
  }
  return kExitPass;
}

inline const char* mode_name(const DynamicsMode& mode) {
  return std::holds_alternative<ProjectedGradient>(mode) ? "projected_gradient" : "sign_descent";
}

inline void describe_run(KeyValueWriter& w, const RunConfig& cfg, const char* command) {
  w.put("schema_version", kSchemaVersion);
  w.put("command", command);
  w.put("seed", cfg.seed);
  w.put("levels", static_cast<int>(cfg.costs.size()) - 1);
  w.put("gradient", to_string(cfg.gradient));
  w.put("subsystem", to_string(cfg.subsystem));
  w.put("dynamics", mode_name(cfg.dynamics));
  if (const auto* sd = std::get_if<SignDescent>(&cfg.dynamics)) {
    w.put("sliding", sd->sliding == SlidingScheme::kEquivalentControl ? "equivalent_control" : "boundary_layer");
    w.put("layer_width", sd->layer_width);
  }
}

inline std::string padded(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

}  // namespace detail

/// Analytic optimum against the brute-force oracle, per level.
inline int cmd_table(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out,
                     std::ostream& err) {
  const TransportCosts costs(cfg.costs);
  const int p = costs.levels();
  const ArchState opt = optimal_state(costs, cfg.assembly);
  const OracleResult oracle = grid_oracle(costs, cfg.assembly);
  const Eigen::VectorXd area = detail::areas(cfg.assembly, opt.n);

  std::vector<std::string> header = {"level", "r_opt", "r_grid", "dr"};
  if (p > 1) header.insert(header.end(), {"n_opt", "n_grid", "dn"});
  header.insert(header.end(), {"cost_min", "cost_grid", "dcost"});
  constexpr std::size_t kWidth = 24;
  std::string table = "#";
  for (const auto& h : header) table += " " + detail::padded(h, kWidth - 1);
  table += "\n";

  double worst = 0.0;
  for (int i = 1; i <= p; ++i) {
    std::vector<std::string> cells;
    cells.push_back(std::to_string(i));
    const double dr = std::abs(opt.r(i - 1) - oracle.r(i - 1));
    cells.insert(cells.end(), {format_number(opt.r(i - 1)), format_number(oracle.r(i - 1)), format_number(dr)});
    worst = std::max(worst, dr);
    if (p > 1) {
      if (i == 1) {
        cells.insert(cells.end(), {"-", "-", "-"});
      } else {
        const double dn = std::abs(opt.n(i - 2) - oracle.n(i - 2));
        worst = std::max(worst, dn);
        cells.insert(cells.end(), {format_number(opt.n(i - 2)), format_number(oracle.n(i - 2)), format_number(dn)});
      }
    }
    const double cmin = min_cost_per_flow(costs, cfg.assembly, i, area(i - 1));
    const double dc = std::abs(cmin - oracle.min_cost(i - 1));
    worst = std::max(worst, dc);
    cells.insert(cells.end(), {format_number(cmin), format_number(oracle.min_cost(i - 1)), format_number(dc)});
    table += " ";
    for (const auto& c : cells) table += " " + detail::padded(c, kWidth - 1);
    table += "\n";
  }
  const bool pass = worst <= kTableTolerance;
  KeyValueWriter w;
  w.put("max_deviation", worst);
  w.put("tolerance", kTableTolerance);
  w.put("pass", pass);
  const std::string text = table + w.str();
  out << text;
  if (const int rc = detail::write_outputs(out_dir, {{"table.txt", text}}, err)) return rc;
  return pass ? kExitPass : kExitFail;
}

/// Integrates from the configured (or seeded) initial state.
inline int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out,
                        std::ostream& err) {
  const ResistanceModel model = cfg.model();
  const Eigen::VectorXd x0 = cfg.initial_state();
  Trajectory traj;
  try {
    traj = integrate(cfg.dynamics, model, x0, cfg.t_end, cfg.h, cfg.settings);
  } catch (const StepFailure& e) {
    err << "error: integration failed: " << e.what() << "\n";
    return kExitFail;
  }
  const DissipationReport diss = traj.size() >= 10 ? dissipation_report(traj, model, cfg.dissipation_tol)
                                                   : DissipationReport{};
  const bool converged = traj.status == TerminationStatus::kConverged;

  KeyValueWriter w;
  detail::describe_run(w, cfg, "simulate");
  w.put("h", cfg.h);
  w.put("t_end", cfg.t_end);
  w.put("status", to_string(traj.status));
  w.put("converged", converged);
  w.put("t_final", traj.times.back());
  w.put("samples", static_cast<long>(traj.size()));
  w.put("initial_state", model.expand(x0).flatten());
  w.put("final_state", model.expand(traj.final_state()).flatten());
  w.put("final_R", traj.resistance.back());
  w.put("R_star", model.lyapunov(model.equilibrium()));
  w.put("final_gap", std::abs(traj.resistance.back() - model.lyapunov(model.equilibrium())));
  w.put("final_psi", traj.imbalance.back());
  if (diss.alpha_hat) {
    w.put("alpha_hat", *diss.alpha_hat);
  } else {
    w.put("alpha_hat", "none");
  }
  w.put("dissipation_violations", diss.violations);
  w.put("psi_integral", diss.psi_integral);
  w.put("max_clip", traj.max_clip);
  w.put("fallback_steps", traj.fallback_steps);
  std::map<std::string, long> counts;
  for (const char* kind : {"SwitchCross", "SlideEnter", "SlideExit", "BoundaryContact", "BoundaryRelease"}) {
    counts[kind] = 0;
  }
  for (const EventRecord& e : traj.events) ++counts[to_string(e.kind)];
  w.put("events.total", static_cast<long>(traj.events.size()));
  for (const auto& [kind, n] : counts) w.put("events." + kind, n);

  const OutputFiles files = {{"trajectory.csv", trajectory_csv(traj, model, cfg.output_stride)},
                             {"summary.txt", w.str()}};
  if (const int rc = detail::write_outputs(out_dir, files, err)) return rc;
  out << w.str();
  return diss.violations == 0 ? kExitPass : kExitFail;
}

/// Contraction certificate on the sampling sub-box plus a dissipation check
/// on a fresh run.
inline int cmd_certify(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out,
                       std::ostream& err) {
  const ResistanceModel model = cfg.model();
  SampleSpec spec = cfg.sampling;
  spec.seed = cfg.seed;
  const ContractionCertificate cert = certify_contraction(scalar_mobility(model.dim(), cfg.mobility), model, spec);

  Trajectory traj;
  try {
    traj = integrate(cfg.dynamics, model, cfg.initial_state(), cfg.t_end, cfg.h, cfg.settings);
  } catch (const StepFailure& e) {
    err << "error: integration failed: " << e.what() << "\n";
    return kExitFail;
  }
  if (traj.size() < 10) {
    err << "error: the certification run produced fewer than 10 samples; increase integrate.t_end\n";
    return kExitFail;
  }
  const DissipationReport diss = dissipation_report(traj, model, cfg.dissipation_tol);
  const bool gap_ok = !diss.converged || diss.final_gap <= kFinalGapTolerance;
  const bool pass = cert.pass && diss.pass() && gap_ok;

  KeyValueWriter w;
  detail::describe_run(w, cfg, "certify");
  w.put("pass", pass);
  w.blank();
  w.comment("contraction: mu(J(x)) <= -m lambda on the sampled sub-box");
  w.put("contraction.pass", cert.pass);
  w.put("contraction.samples", cert.samples);
  w.put("contraction.skipped", cert.skipped);
  w.put("contraction.generator", "halton-cranley-patterson");
  w.put("contraction.seed", cert.seed);
  w.put("contraction.radius", spec.radius);
  w.put("contraction.box_lo", cert.box_lo);
  w.put("contraction.box_hi", cert.box_hi);
  w.put("contraction.mobility_m", cert.mobility_m);
  w.put("contraction.nu_estimate", cert.nu_estimate);
  w.put("contraction.worst_mu", cert.worst_mu);
  w.put("contraction.curvature_lambda", cert.curvature_lambda);
  w.put("contraction.margin", cert.margin);
  w.put("contraction.tolerance", kCertificateTolerance);
  w.put("contraction.worst_point", cert.worst_point);
  w.put("contraction.flattest_point", cert.flattest_point);
  w.put("contraction.witnesses", static_cast<long>(cert.witnesses.size()));
  for (std::size_t k = 0; k < cert.witnesses.size(); ++k) {
    w.put("contraction.witness." + std::to_string(k), cert.witnesses[k]);
  }
  w.blank();
  w.comment("dissipation along a fresh run");
  w.put("dissipation.pass", diss.pass() && gap_ok);
  w.put("dissipation.status", to_string(traj.status));
  w.put("dissipation.intervals", diss.intervals);
  w.put("dissipation.violations", diss.violations);
  w.put("dissipation.max_increase", diss.max_increase);
  if (diss.alpha_hat) {
    w.put("dissipation.alpha_hat", *diss.alpha_hat);
  } else {
    w.put("dissipation.alpha_hat", "none");
  }
  w.put("dissipation.psi_integral", diss.psi_integral);
  w.put("dissipation.final_gap", diss.final_gap);

  if (const int rc = detail::write_outputs(out_dir, {{"certificate.txt", w.str()}}, err)) return rc;
  out << w.str();
  return pass ? kExitPass : kExitFail;
}

/// Fits the separation decay of a trajectory pair against the certified rate.
inline int cmd_converge(const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& out,
                        std::ostream& err) {
  const ResistanceModel model = cfg.model();
  const InitialPair pair = cfg.pair();
  PairedRun run;
  try {
    run = two_trajectory_run(cfg.dynamics, model, pair.x0, pair.y0, cfg.converge_t_end, cfg.h, cfg.settings);
  } catch (const StepFailure& e) {
    err << "error: integration failed: " << e.what() << "\n";
    return kExitFail;
  }
  SampleSpec spec = cfg.sampling;
  spec.seed = cfg.seed;
  const ContractionCertificate cert = certify_contraction(scalar_mobility(model.dim(), cfg.mobility), model, spec);

  KeyValueWriter w;
  detail::describe_run(w, cfg, "converge");
  w.put("x0", model.expand(pair.x0).flatten());
  w.put("y0", model.expand(pair.y0).flatten());
  w.put("t_end", cfg.converge_t_end);
  w.put("initial_separation", run.separation.front());
  w.put("final_separation", run.separation.back());
  w.put("nu_estimate", cert.nu_estimate);

  const bool identical = std::all_of(run.separation.begin(), run.separation.end(),
                                     [](double s) { return s <= kZeroSeparation; });
  int rc = kExitPass;
  if (identical) {
    w.put("degenerate", true);
    w.put("pass", true);
  } else {
    try {
      const ConvergenceFit fit = fit_rate(run.first.times, run.separation);
      const bool pass = fit.rate >= kRateFraction * cert.nu_estimate;
      w.put("degenerate", false);
      w.put("rate", fit.rate);
      w.put("prefactor", fit.prefactor);
      w.put("prefactor_at_least_one", fit.prefactor >= 1.0);
      w.put("envelope", fit.envelope);
      w.put("r_squared", fit.r_squared);
      w.put("window", Eigen::VectorXd(Eigen::Vector2d(fit.t_lo, fit.t_hi)));
      w.put("points", fit.points);
      w.put("rate_over_nu", fit.rate / cert.nu_estimate);
      w.put("pass", pass);
      rc = pass ? kExitPass : kExitFail;
    } catch (const Error& e) {
      w.put("degenerate", true);
      w.put("fit_error", std::string(e.what()));
      w.put("pass", false);
      rc = kExitFail;
    }
  }
  if (const int io = detail::write_outputs(out_dir, {{"convergence.txt", w.str()}}, err)) return io;
  out << w.str();
  return rc;
}

/// Loads and validates the config, applies the seed override and dispatches.
inline int run_command(const std::string& command, const std::string& config_path,
                       const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed, std::ostream& out,
                       std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_run_config(config_path);
    if (seed) cfg.seed = *seed;
  } catch (const Error& e) {
    err << "error: " << config_path << ": " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    if (command == "table") return cmd_table(cfg, out_dir, out, err);
    if (command == "simulate") return cmd_simulate(cfg, out_dir, out, err);
    if (command == "certify") return cmd_certify(cfg, out_dir, out, err);
    if (command == "converge") return cmd_converge(cfg, out_dir, out, err);
  } catch (const InvalidConfig& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFail;
  }
  err << "error: unknown command `" << command << "`\n";
  return kExitConfig;
}

}  // namespace constructal

#endif  // CONSTRUCTAL_COMMANDS_HPP
