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

// Closed-form area-to-point resistance of a p-level constructal hierarchy.
//
// State layout used throughout the library: x = (r_1, ..., r_p, n_2, ..., n_p),
// i.e. p aspect ratios followed by p-1 branching numbers. Levels are 1-based
// in every public function taking a `level` argument.
//
// Per-level cost per unit flow:
//   c_i(A, r) = sqrt(A) * (alpha_i K_{i-1} r + beta_i K_i / r)
// minimized at r = sqrt(beta_i/alpha_i) sqrt(K_i/K_{i-1}) with minimum
//   2 sqrt(alpha_i beta_i) sqrt(K_{i-1} K_i) sqrt(A).
// Total resistance (cost per unit areal generation rate):
//   R(x) = sum_i A_i c_i(A_i, r_i) + sum_{i>=2} kappa_i/2 (n_i - n_i,opt)^2.

#ifndef CONSTRUCTAL_HIERARCHY_HPP
#define CONSTRUCTAL_HIERARCHY_HPP

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "constructal/error.hpp"

namespace constructal {

/// Strictly decreasing resistivity ladder K_0 > K_1 > ... > K_p > 0.
class TransportCosts {
 public:
  explicit TransportCosts(std::vector<double> k) : k_(std::move(k)) {
    if (k_.size() < 2) {
      throw InvalidConfig("transport costs need at least two coefficients (p >= 1)");
    }
    for (std::size_t i = 0; i < k_.size(); ++i) {
      if (!std::isfinite(k_[i]) || k_[i] <= 0.0) {
        throw InvalidConfig("transport cost K_" + std::to_string(i) + " must be positive and finite");
      }
      if (i > 0 && !(k_[i] < k_[i - 1])) {
        throw InvalidConfig("transport costs must be strictly decreasing (K_" + std::to_string(i) +
                            " >= K_" + std::to_string(i - 1) + ")");
      }
    }
  }

  int levels() const { return static_cast<int>(k_.size()) - 1; }
  double operator[](int i) const { return k_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& values() const { return k_; }

 private:
  std::vector<double> k_;
};

struct Prefactors {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

/// Prefactors identified so that the per-level minimizers equal the reference
/// ratios r_1 = 2 K_1/K_0 and r_i = K_i/K_{i-1}, with per-flow minima
/// sqrt(A_1 K_0 K_1 / 2) and sqrt(A_i K_{i-1} K_i).
inline Prefactors bejan_prefactors(const TransportCosts& costs) {
  const int p = costs.levels();
  Prefactors pf{Eigen::VectorXd(p), Eigen::VectorXd(p)};
  for (int i = 0; i < p; ++i) {
    const double rho = costs[i + 1] / costs[i];
    // alpha*beta fixes the minimum, beta/alpha fixes the minimizer.
    const double product = (i == 0) ? 0.125 : 0.25;
    const double quotient = (i == 0) ? 4.0 * rho : rho;
    pf.alpha(i) = std::sqrt(product / quotient);
    pf.beta(i) = std::sqrt(product * quotient);
  }
  return pf;
}

inline Prefactors uniform_prefactors(int levels, double alpha, double beta) {
  return {Eigen::VectorXd::Constant(levels, alpha), Eigen::VectorXd::Constant(levels, beta)};
}

struct AdmissibleBounds {
  double r_lo = 0.05;
  double r_hi = 4.0;
  double n_hi = 64.0;
};

struct AssemblyConfig {
  double gamma = 1.0;  // areal generation rate
  double area = 1.0;   // elemental area A_1
  Prefactors prefactors;
  Eigen::VectorXd kappa;  // p-1 branching penalty weights
  AdmissibleBounds bounds;
};

/// Default configuration: Bejan prefactors, unit kappa, default box.
inline AssemblyConfig default_assembly(const TransportCosts& costs) {
  AssemblyConfig cfg;
  cfg.prefactors = bejan_prefactors(costs);
  cfg.kappa = Eigen::VectorXd::Ones(costs.levels() - 1);
  return cfg;
}

struct ArchState {
  Eigen::VectorXd r;  // p aspect ratios H_i / L_i
  Eigen::VectorXd n;  // p-1 branching numbers, levels 2..p

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd x(r.size() + n.size());
    x << r, n;
    return x;
  }

  static ArchState unflatten(int levels, const Eigen::VectorXd& x) {
    if (x.size() != 2 * levels - 1) {
      throw DomainError("state vector has dimension " + std::to_string(x.size()) + ", expected " +
                        std::to_string(2 * levels - 1));
    }
    return {x.head(levels), x.tail(levels - 1)};
  }
};

struct DerivedGeometry {
  Eigen::VectorXd area;    // A_i
  Eigen::VectorXd flow;    // m_i = gamma A_i
  Eigen::VectorXd height;  // H_i
  Eigen::VectorXd length;  // L_i
};

enum class GradientMode { kDecoupled, kCoupled };

inline const char* to_string(GradientMode mode) {
  return mode == GradientMode::kDecoupled ? "decoupled" : "coupled";
}

namespace detail {

inline void check_level(const TransportCosts& costs, int level) {
  if (level < 1 || level > costs.levels()) {
    throw DomainError("level " + std::to_string(level) + " outside 1.." + std::to_string(costs.levels()));
  }
}

inline void check_shape(const TransportCosts& costs, const ArchState& x) {
  const int p = costs.levels();
  if (x.r.size() != p || x.n.size() != p - 1) {
    throw DomainError("architectural state does not match the number of levels");
  }
}

// Coefficients of s_i(r) = a_i r + b_i / r.
inline std::pair<double, double> level_coefficients(const TransportCosts& costs, const AssemblyConfig& cfg,
                                                    int i0) {
  return {cfg.prefactors.alpha(i0) * costs[i0], cfg.prefactors.beta(i0) * costs[i0 + 1]};
}

inline Eigen::VectorXd areas(const AssemblyConfig& cfg, const Eigen::VectorXd& n) {
  Eigen::VectorXd a(n.size() + 1);
  a(0) = cfg.area;
  for (Eigen::Index i = 1; i < a.size(); ++i) a(i) = n(i - 1) * a(i - 1);
  return a;
}

}  // namespace detail

inline DerivedGeometry derive_geometry(const TransportCosts& costs, const AssemblyConfig& cfg,
                                       const ArchState& x) {
  detail::check_shape(costs, x);
  for (Eigen::Index i = 0; i < x.r.size(); ++i) {
    if (!(x.r(i) > 0.0)) throw DomainError("aspect ratio r_" + std::to_string(i + 1) + " must be positive");
  }
  for (Eigen::Index i = 0; i < x.n.size(); ++i) {
    if (!(x.n(i) >= 1.0)) throw DomainError("branching number n_" + std::to_string(i + 2) + " must be >= 1");
  }
  DerivedGeometry g;
  g.area = detail::areas(cfg, x.n);
  g.flow = cfg.gamma * g.area;
  g.height = (g.area.array() * x.r.array()).sqrt();
  g.length = (g.area.array() / x.r.array()).sqrt();
  return g;
}

/// Cost per unit flow at one level, C_i / m_i.
inline double level_cost(const TransportCosts& costs, const AssemblyConfig& cfg, int level, double area,
                         double ratio) {
  detail::check_level(costs, level);
  if (!(area > 0.0) || !(ratio > 0.0)) throw DomainError("level_cost needs positive area and ratio");
  const auto [a, b] = detail::level_coefficients(costs, cfg, level - 1);
  return std::sqrt(area) * (a * ratio + b / ratio);
}

inline Eigen::VectorXd optimal_ratios(const TransportCosts& costs, const AssemblyConfig& cfg) {
  const int p = costs.levels();
  Eigen::VectorXd r(p);
  for (int i = 0; i < p; ++i) {
    r(i) = std::sqrt(cfg.prefactors.beta(i) / cfg.prefactors.alpha(i)) * std::sqrt(costs[i + 1] / costs[i]);
  }
  return r;
}

/// Reference aspect ratios in closed form: 2 K_1/K_0, then K_i/K_{i-1}.
inline Eigen::VectorXd table_ratios(const TransportCosts& costs) {
  const int p = costs.levels();
  Eigen::VectorXd r(p);
  r(0) = 2.0 * costs[1] / costs[0];
  for (int i = 1; i < p; ++i) r(i) = costs[i + 1] / costs[i];
  return r;
}

/// n_2 = 2 K_0/K_2, n_i = 4 K_{i-2}/K_i (i >= 3). Empty for p = 1.
inline Eigen::VectorXd optimal_branching(const TransportCosts& costs) {
  const int p = costs.levels();
  Eigen::VectorXd n(std::max(p - 1, 0));
  for (int i = 2; i <= p; ++i) {
    n(i - 2) = (i == 2) ? 2.0 * costs[0] / costs[2] : 4.0 * costs[i - 2] / costs[i];
  }
  return n;
}

inline ArchState optimal_state(const TransportCosts& costs, const AssemblyConfig& cfg) {
  return {optimal_ratios(costs, cfg), optimal_branching(costs)};
}

inline double min_cost_per_flow(const TransportCosts& costs, const AssemblyConfig& cfg, int level, double area) {
  detail::check_level(costs, level);
  if (!(area > 0.0)) throw DomainError("min_cost_per_flow needs a positive area");
  const int i = level - 1;
  return 2.0 * std::sqrt(cfg.prefactors.alpha(i) * cfg.prefactors.beta(i)) * std::sqrt(costs[i] * costs[i + 1]) *
         std::sqrt(area);
}

inline double branching_penalty(const TransportCosts& costs, const AssemblyConfig& cfg, const Eigen::VectorXd& n) {
  const Eigen::VectorXd dev = n - optimal_branching(costs);
  return 0.5 * (cfg.kappa.array() * dev.array().square()).sum();
}

namespace detail {

// sum_i A_i^{3/2} s_i(r_i) with explicitly supplied areas.
inline double weighted_level_sum(const TransportCosts& costs, const AssemblyConfig& cfg, const Eigen::VectorXd& r,
                                 const Eigen::VectorXd& area) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (!(r(i) > 0.0)) throw DomainError("aspect ratio r_" + std::to_string(i + 1) + " must be positive");
    const auto [a, b] = level_coefficients(costs, cfg, static_cast<int>(i));
    total += area(i) * std::sqrt(area(i)) * (a * r(i) + b / r(i));
  }
  return total;
}

}  // namespace detail

inline double resistance(const TransportCosts& costs, const AssemblyConfig& cfg, const ArchState& x) {
  const DerivedGeometry geo = derive_geometry(costs, cfg, x);
  return detail::weighted_level_sum(costs, cfg, x.r, geo.area) + branching_penalty(costs, cfg, x.n);
}

/// Resistance with areas frozen at the optimal branching numbers. This is
/// the Lyapunov functional of the decoupled dynamics; it equals `resistance`
/// whenever n = n_opt.
inline double frozen_area_resistance(const TransportCosts& costs, const AssemblyConfig& cfg, const ArchState& x) {
  detail::check_shape(costs, x);
  const Eigen::VectorXd frozen = detail::areas(cfg, optimal_branching(costs));
  return detail::weighted_level_sum(costs, cfg, x.r, frozen) + branching_penalty(costs, cfg, x.n);
}

inline Eigen::VectorXd grad_resistance(const TransportCosts& costs, const AssemblyConfig& cfg, const ArchState& x,
                                       GradientMode mode = GradientMode::kDecoupled) {
  const DerivedGeometry geo = derive_geometry(costs, cfg, x);
  const int p = costs.levels();
  const Eigen::VectorXd n_opt = optimal_branching(costs);
  Eigen::VectorXd g(2 * p - 1);
  for (int i = 0; i < p; ++i) {
    const auto [a, b] = detail::level_coefficients(costs, cfg, i);
    const double w = geo.area(i) * std::sqrt(geo.area(i));
    g(i) = w * (a - b / (x.r(i) * x.r(i)));
  }
  for (int k = 0; k < p - 1; ++k) {
    double gk = cfg.kappa(k) * (x.n(k) - n_opt(k));
    if (mode == GradientMode::kCoupled) {
      // d/dn_k of A_j^{3/2} is 1.5 A_j^{3/2} / n_k for every level j >= k+2.
      for (int j = k + 1; j < p; ++j) {
        const auto [a, b] = detail::level_coefficients(costs, cfg, j);
        const double w = geo.area(j) * std::sqrt(geo.area(j));
        gk += 1.5 * w * (a * x.r(j) + b / x.r(j)) / x.n(k);
      }
    }
    g(p + k) = gk;
  }
  return g;
}

/// Jacobian of grad_resistance. In coupled mode this is the (symmetric)
/// Hessian of R; in decoupled mode the n-rows reduce to diag(kappa) and the
/// matrix is generally non-symmetric.
inline Eigen::MatrixXd gradient_jacobian(const TransportCosts& costs, const AssemblyConfig& cfg, const ArchState& x,
                                         GradientMode mode = GradientMode::kDecoupled) {
  const DerivedGeometry geo = derive_geometry(costs, cfg, x);
  const int p = costs.levels();
  const int d = 2 * p - 1;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd w(p), s(p), ds(p);
  for (int i = 0; i < p; ++i) {
    const auto [a, b] = detail::level_coefficients(costs, cfg, i);
    const double r = x.r(i);
    w(i) = geo.area(i) * std::sqrt(geo.area(i));
    s(i) = a * r + b / r;
    ds(i) = a - b / (r * r);
    h(i, i) = w(i) * 2.0 * b / (r * r * r);
    for (int k = 0; k < i; ++k) h(i, p + k) = 1.5 * w(i) * ds(i) / x.n(k);
  }
  for (int k = 0; k < p - 1; ++k) {
    h(p + k, p + k) = cfg.kappa(k);
    if (mode != GradientMode::kCoupled) continue;
    for (int j = k + 1; j < p; ++j) h(p + k, j) = h(j, p + k);
    for (int l = 0; l < p - 1; ++l) {
      double acc = 0.0;
      for (int j = std::max(k, l) + 1; j < p; ++j) acc += w(j) * s(j);
      h(p + k, p + l) += (k == l ? 0.75 : 2.25) * acc / (x.n(k) * x.n(l));
    }
  }
  return h;
}

/// Psi(x) = sum (r_i - r_i,opt)^2 + sum (n_i - n_i,opt)^2.
inline double imbalance(const TransportCosts& costs, const AssemblyConfig& cfg, const ArchState& x) {
  detail::check_shape(costs, x);
  return (x.r - optimal_ratios(costs, cfg)).squaredNorm() + (x.n - optimal_branching(costs)).squaredNorm();
}

/// Validates prefactor/kappa sizes and that the box strictly contains the optimum.
inline void validate(const TransportCosts& costs, const AssemblyConfig& cfg) {
  const int p = costs.levels();
  auto fail = [](const std::string& what) { throw InvalidConfig(what); };
  if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma)) fail("gamma must be positive");
  if (!(cfg.area > 0.0) || !std::isfinite(cfg.area)) fail("elemental area A1 must be positive");
  if (cfg.prefactors.alpha.size() != p || cfg.prefactors.beta.size() != p) {
    fail("alpha and beta need one entry per level (" + std::to_string(p) + ")");
  }
  if ((cfg.prefactors.alpha.array() <= 0.0).any() || (cfg.prefactors.beta.array() <= 0.0).any()) {
    fail("alpha and beta must be positive");
  }
  if (cfg.kappa.size() != p - 1) fail("kappa needs p-1 = " + std::to_string(p - 1) + " entries");
  if ((cfg.kappa.array() <= 0.0).any()) fail("kappa must be positive");
  const AdmissibleBounds& bx = cfg.bounds;
  if (!(bx.r_lo > 0.0) || !(bx.r_lo < bx.r_hi) || !std::isfinite(bx.r_hi)) fail("need 0 < r_lo < r_hi < inf");
  if (!(bx.n_hi > 1.0) || !std::isfinite(bx.n_hi)) fail("need 1 < n_hi < inf");
  const ArchState opt = optimal_state(costs, cfg);
  for (int i = 0; i < p; ++i) {
    if (!(opt.r(i) > bx.r_lo && opt.r(i) < bx.r_hi)) {
      std::ostringstream msg;
      msg << "optimal ratio r_" << i + 1 << " = " << opt.r(i) << " is not strictly inside [" << bx.r_lo << ", "
          << bx.r_hi << "]";
      fail(msg.str());
    }
  }
  for (int k = 0; k < p - 1; ++k) {
    if (!(opt.n(k) > 1.0 && opt.n(k) < bx.n_hi)) {
      std::ostringstream msg;
      msg << "optimal branching n_" << k + 2 << " = " << opt.n(k) << " is not strictly inside [1, " << bx.n_hi
          << "]";
      fail(msg.str());
    }
  }
}

}  // namespace constructal

#endif  // CONSTRUCTAL_HIERARCHY_HPP
