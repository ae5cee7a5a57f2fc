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

// Contraction certificates from matrix measures, dissipation checks on
// recorded trajectories, exponential-rate fits and brute-force oracles for
// the optimal hierarchy.

#ifndef CONSTRUCTAL_ANALYSIS_HPP
#define CONSTRUCTAL_ANALYSIS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "constructal/dynamics.hpp"
#include "constructal/error.hpp"
#include "constructal/hierarchy.hpp"
#include "constructal/model.hpp"

namespace constructal {

namespace detail {

/// Eigenvalues of the symmetric part of `a`, solved in extended precision.
/// Jacobians near the box corners reach norms of 1e8, where a double solve
/// carries absolute errors near 1e-8.
inline Eigen::Matrix<long double, Eigen::Dynamic, 1> symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  using MatrixLd = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const MatrixLd al = a.cast<long double>();
  const MatrixLd sym = 0.5L * (al + al.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixLd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

}  // namespace detail

/// Euclidean matrix measure: largest eigenvalue of the symmetric part.
inline double matrix_measure(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DomainError("matrix_measure needs a non-empty square matrix");
  if (!a.allFinite()) throw NonFiniteInput("matrix_measure: non-finite entry");
  return static_cast<double>(detail::symmetric_eigenvalues(a).maxCoeff());
}

namespace detail {

inline double scalar_mobility_of(const ProjectedGradient& pg, Eigen::Index dim) {
  if (pg.mobility.size() != dim) throw InvalidConfig("mobility has the wrong dimension");
  const double m = pg.mobility(0);
  if (!(m > 0.0) || (pg.mobility.array() != m).any()) {
    throw InvalidConfig("contraction analysis needs a constant scalar mobility");
  }
  return m;
}

}  // namespace detail

/// Jacobian of the projected-gradient field in the interior: -M D(grad R).
inline Eigen::MatrixXd jacobian(const ProjectedGradient& pg, const ResistanceModel& model, const Eigen::VectorXd& x) {
  model.box().require_contains(x);
  if (!model.box().interior(x)) throw DomainError("jacobian is only defined at interior points");
  if (pg.mobility.size() != model.dim()) throw InvalidConfig("mobility has the wrong dimension");
  return -(pg.mobility.asDiagonal() * model.gradient_jacobian(x));
}

/// Smallest eigenvalue of the symmetric part of D(grad R) at x.
inline double curvature(const ResistanceModel& model, const Eigen::VectorXd& x) {
  return static_cast<double>(detail::symmetric_eigenvalues(model.gradient_jacobian(x)).minCoeff());
}

/// Right side of the gradient-type bound mu(J) <= -m lambda_min + (L_M/2) |grad R|.
inline double structural_bound(const ProjectedGradient& pg, const ResistanceModel& model, const Eigen::VectorXd& x,
                               double lipschitz_mobility) {
  const double m = detail::scalar_mobility_of(pg, model.dim());
  model.box().require_contains(x);
  return -m * curvature(model, x) + 0.5 * lipschitz_mobility * model.gradient(x).norm();
}

struct SampleSpec {
  long count = 10000;
  double radius = 0.1;  // relative half-width of the sub-box around the equilibrium
  std::uint64_t seed = 0;
};

/// Sub-box [x*(1 - radius), x*(1 + radius)] intersected with the admissible box.
inline Box certification_box(const ResistanceModel& model, double radius) {
  if (!(radius > 0.0)) throw InvalidConfig("sampling radius must be positive");
  const Eigen::VectorXd& eq = model.equilibrium();
  const Eigen::VectorXd lo = (eq * (1.0 - radius)).cwiseMax(model.box().lo());
  const Eigen::VectorXd hi = (eq * (1.0 + radius)).cwiseMin(model.box().hi());
  return Box(lo, hi);
}

/// Halton points with a Cranley-Patterson rotation drawn from `seed`.
class HaltonSequence {
 public:
  HaltonSequence(Eigen::Index dim, std::uint64_t seed) : shift_(dim) {
    static constexpr std::array<int, 32> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,  31,
                                                    37, 41, 43, 47, 53, 59, 61, 67, 71, 73,  79,
                                                    83, 89, 97, 101, 103, 107, 109, 113, 127, 131};
    if (dim > static_cast<Eigen::Index>(kPrimes.size())) throw DomainError("Halton dimension too large");
    bases_.assign(kPrimes.begin(), kPrimes.begin() + dim);
    std::mt19937_64 rng(seed);
    for (Eigen::Index j = 0; j < dim; ++j) shift_(j) = static_cast<double>(rng() >> 11) * 0x1p-53;
  }

  Eigen::VectorXd point(std::uint64_t index) const {
    Eigen::VectorXd u(shift_.size());
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      double f = 1.0, r = 0.0;
      const int b = bases_[static_cast<std::size_t>(j)];
      for (std::uint64_t i = index + 1; i > 0; i /= static_cast<std::uint64_t>(b)) {
        f /= b;
        r += f * static_cast<double>(i % static_cast<std::uint64_t>(b));
      }
      u(j) = std::fmod(r + shift_(j), 1.0);
    }
    return u;
  }

 private:
  std::vector<int> bases_;
  Eigen::VectorXd shift_;
};

struct ContractionCertificate {
  long samples = 0;
  long skipped = 0;            // samples on the box boundary, where J is not defined
  double nu_estimate = 0.0;    // m * curvature_lambda
  double worst_mu = -std::numeric_limits<double>::infinity();
  double curvature_lambda = std::numeric_limits<double>::infinity();
  double mobility_m = 0.0;
  double margin = 0.0;         // worst_mu + m * curvature_lambda
  bool pass = false;
  Eigen::VectorXd worst_point;       // sample attaining worst_mu
  Eigen::VectorXd flattest_point;    // sample attaining curvature_lambda
  std::vector<Eigen::VectorXd> witnesses;  // samples violating a condition
  Eigen::VectorXd box_lo, box_hi;
  std::uint64_t seed = 0;
};

inline constexpr double kCertificateTolerance = 1e-8;
inline constexpr std::size_t kMaxWitnesses = 16;

inline ContractionCertificate certify_contraction(const ProjectedGradient& pg, const ResistanceModel& model,
                                                  const SampleSpec& spec) {
  if (spec.count <= 0) throw InvalidConfig("sample count must be positive");
  const double m = detail::scalar_mobility_of(pg, model.dim());
  const Box sub = certification_box(model, spec.radius);
  const HaltonSequence seq(model.dim(), spec.seed);
  ContractionCertificate cert;
  cert.mobility_m = m;
  cert.box_lo = sub.lo();
  cert.box_hi = sub.hi();
  cert.seed = spec.seed;

  std::vector<Eigen::VectorXd> points;
  std::vector<double> mus, lambdas;
  points.reserve(static_cast<std::size_t>(spec.count));
  for (long k = 0; k < spec.count; ++k) {
    const Eigen::VectorXd u = seq.point(static_cast<std::uint64_t>(k));
    const Eigen::VectorXd x = sub.lo().array() + u.array() * (sub.hi() - sub.lo()).array();
    if (!model.box().interior(x)) {
      ++cert.skipped;
      continue;
    }
    const double mu = matrix_measure(jacobian(pg, model, x));
    const double lambda = curvature(model, x);
    if (mu > cert.worst_mu) {
      cert.worst_mu = mu;
      cert.worst_point = x;
    }
    if (lambda < cert.curvature_lambda) {
      cert.curvature_lambda = lambda;
      cert.flattest_point = x;
    }
    points.push_back(x);
    mus.push_back(mu);
    lambdas.push_back(lambda);
    ++cert.samples;
  }
  if (cert.samples == 0) throw InsufficientData("no interior samples in the certification box");

  cert.nu_estimate = m * cert.curvature_lambda;
  cert.margin = cert.worst_mu + cert.nu_estimate;
  const double limit = -cert.nu_estimate + kCertificateTolerance;
  for (std::size_t k = 0; k < points.size() && cert.witnesses.size() < kMaxWitnesses; ++k) {
    if (mus[k] > limit || !(lambdas[k] > 0.0)) cert.witnesses.push_back(points[k]);
  }
  cert.pass = cert.worst_mu <= limit && cert.curvature_lambda > 0.0;
  return cert;
}

struct DissipationReport {
  std::optional<double> alpha_hat;  // absent when no interval has Psi above the threshold
  long intervals = 0;
  long violations = 0;
  double max_increase = -std::numeric_limits<double>::infinity();  // largest R(t_{k+1}) - R(t_k)
  double psi_integral = 0.0;
  double final_gap = 0.0;  // |R(t_end) - R(x*)|
  bool converged = false;

  bool pass() const { return violations == 0 && alpha_hat.value_or(1.0) > 0.0 && std::isfinite(psi_integral); }
};

inline constexpr double kDissipationPsiThreshold = 1e-8;
inline constexpr double kDissipationRelTol = 1e-9;

/// Per-interval check R(t_{k+1}) <= R(t_k) + rel_tol (1 + |R(t_k)|) on the
/// monitored functional, with alpha_hat = min (-dR/dt) / Psi over intervals
/// where Psi >= 1e-8.
inline DissipationReport dissipation_report(const Trajectory& traj, double r_star,
                                            double rel_tol = kDissipationRelTol) {
  if (traj.size() < 10) throw InsufficientData("dissipation_report needs at least 10 samples");
  DissipationReport rep;
  rep.converged = traj.status == TerminationStatus::kConverged;
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double dt = traj.times[k + 1] - traj.times[k];
    const double d_r = traj.resistance[k + 1] - traj.resistance[k];
    ++rep.intervals;
    rep.max_increase = std::max(rep.max_increase, d_r);
    if (d_r > rel_tol * (1.0 + std::abs(traj.resistance[k]))) ++rep.violations;
    if (traj.imbalance[k] >= kDissipationPsiThreshold && dt > 0.0) {
      alpha = std::min(alpha, (-d_r / dt) / traj.imbalance[k]);
    }
    rep.psi_integral += 0.5 * dt * (traj.imbalance[k] + traj.imbalance[k + 1]);
  }
  if (std::isfinite(alpha)) rep.alpha_hat = alpha;
  rep.final_gap = std::abs(traj.resistance.back() - r_star);
  return rep;
}

inline DissipationReport dissipation_report(const Trajectory& traj, const ResistanceModel& model,
                                            double rel_tol = kDissipationRelTol) {
  return dissipation_report(traj, model.lyapunov(model.equilibrium()), rel_tol);
}

struct ConvergenceFit {
  double rate = 0.0;
  double prefactor = 0.0;  // exp(intercept) / value(0)
  double r_squared = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  long points = 0;
  double envelope = 0.0;   // max_k value(t_k) e^{rate t_k} / value(0) over all positive samples
};

inline constexpr double kFitFloor = 1e-14;
inline constexpr long kMinFitPoints = 20;

/// Least-squares fit of log(value) = intercept - rate * t over the samples
/// after the first 10%, using only values above 1e-14.
inline ConvergenceFit fit_rate(const std::vector<double>& t, const std::vector<double>& value) {
  if (t.size() != value.size()) throw DomainError("fit_rate: series lengths differ");
  if (std::none_of(value.begin(), value.end(), [](double v) { return v > kFitFloor; })) {
    throw DegenerateFit("all values are below 1e-14");
  }
  if (!(value.front() > 0.0)) throw DegenerateFit("initial value must be positive");
  const std::size_t start = value.size() / 10;
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  long n = 0;
  ConvergenceFit fit;
  for (std::size_t k = start; k < value.size(); ++k) {
    if (!(value[k] > kFitFloor)) continue;
    const double y = std::log(value[k]);
    if (n == 0) fit.t_lo = t[k];
    fit.t_hi = t[k];
    st += t[k];
    sy += y;
    stt += t[k] * t[k];
    sty += t[k] * y;
    ++n;
  }
  if (n < kMinFitPoints) throw InsufficientData("fit_rate needs at least 20 positive samples after the transient");
  const double dn = static_cast<double>(n);
  const double den = dn * stt - st * st;
  if (!(den > 0.0)) throw DegenerateFit("fit window has no time spread");
  const double slope = (dn * sty - st * sy) / den;
  const double intercept = (sy - slope * st) / dn;
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean = sy / dn;
  for (std::size_t k = start; k < value.size(); ++k) {
    if (!(value[k] > kFitFloor)) continue;
    const double y = std::log(value[k]);
    ss_res += std::pow(y - (intercept + slope * t[k]), 2);
    ss_tot += std::pow(y - mean, 2);
  }
  fit.rate = -slope;
  fit.prefactor = std::exp(intercept) / value.front();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.points = n;
  for (std::size_t k = 0; k < value.size(); ++k) {
    if (value[k] > kFitFloor) {
      fit.envelope = std::max(fit.envelope, value[k] * std::exp(fit.rate * t[k]) / value.front());
    }
  }
  return fit;
}

/// Golden-section minimization of a unimodal function on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-10) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

struct OracleResult {
  Eigen::VectorXd r;         // per-level minimizers of the cost per flow
  Eigen::VectorXd n;         // minimizers of the branching penalty
  Eigen::VectorXd min_cost;  // per-level minima of the cost per flow at the searched areas
};

inline constexpr int kOracleGridPoints = 100000;

/// Brute-force optimum: a log-spaced grid over [r_lo, r_hi] brackets each
/// level's minimizer, then golden-section search refines it. Branching
/// numbers come from golden-section search on the penalty over [1, n_hi].
inline OracleResult grid_oracle(const TransportCosts& costs, const AssemblyConfig& cfg) {
  validate(costs, cfg);
  const int p = costs.levels();
  const AdmissibleBounds& bx = cfg.bounds;
  OracleResult out{Eigen::VectorXd(p), Eigen::VectorXd(p - 1), Eigen::VectorXd(p)};
  Eigen::VectorXd n = optimal_branching(costs);
  for (int k = 0; k < p - 1; ++k) {
    const auto penalty = [&](double v) {
      Eigen::VectorXd trial = n;
      trial(k) = v;
      return branching_penalty(costs, cfg, trial);
    };
    out.n(k) = golden_section(penalty, 1.0, bx.n_hi);
  }
  const Eigen::VectorXd area = detail::areas(cfg, out.n);
  const double log_lo = std::log(bx.r_lo), log_hi = std::log(bx.r_hi);
  const double step = (log_hi - log_lo) / (kOracleGridPoints - 1);
  for (int i = 1; i <= p; ++i) {
    const auto cost = [&](double r) { return level_cost(costs, cfg, i, area(i - 1), r); };
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int g = 0; g < kOracleGridPoints; ++g) {
      const double v = cost(std::exp(log_lo + g * step));
      if (v < best_val) {
        best_val = v;
        best = g;
      }
    }
    const double a = std::exp(log_lo + std::max(best - 1, 0) * step);
    const double b = std::exp(log_lo + std::min(best + 1, kOracleGridPoints - 1) * step);
    out.r(i - 1) = golden_section(cost, a, b);
    out.min_cost(i - 1) = cost(out.r(i - 1));
  }
  return out;
}

}  // namespace constructal

#endif  // CONSTRUCTAL_ANALYSIS_HPP
