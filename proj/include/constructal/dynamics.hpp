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

// Integration of the resistance-driven Filippov inclusion on the admissible
// box, in two flavours:
//
//  * sign descent   v_j = -gain_j sgn(d_j R), with sliding realized either by
//                   equivalent control or by a boundary layer of width eps;
//  * projected gradient  v = Pi_T(x)(-M grad R).
//
// Within a regime (frozen signs, sliding set and active faces) the vector
// field is smooth and is advanced with classical RK4, or with an exponential
// Rosenbrock-Euler step when it is stiff.
// Regime changes are located by bisection on the switching functions and
// box faces; the remainder of the nominal step is then re-taken in the new
// regime. RK4 substeps are limited by the spectral radius of the regime
// Jacobian and by the distance travelled; stiff, slowly moving regimes take
// the exponential step instead.

#ifndef CONSTRUCTAL_DYNAMICS_HPP
#define CONSTRUCTAL_DYNAMICS_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "constructal/error.hpp"
#include "constructal/model.hpp"
#include "constructal/nonsmooth.hpp"

namespace constructal {

enum class SlidingScheme { kEquivalentControl, kBoundaryLayer };

struct SignDescent {
  Eigen::VectorXd gains;  // eta for r-coordinates followed by zeta for n-coordinates
  SlidingScheme sliding = SlidingScheme::kBoundaryLayer;
  double layer_width = 1e-4;
};

struct ProjectedGradient {
  Eigen::VectorXd mobility;  // diagonal of a constant positive-definite mobility
};

using DynamicsMode = std::variant<SignDescent, ProjectedGradient>;

inline SignDescent unit_sign_descent(Eigen::Index dim, SlidingScheme sliding = SlidingScheme::kBoundaryLayer,
                                     double layer_width = 1e-4) {
  return {Eigen::VectorXd::Ones(dim), sliding, layer_width};
}

inline ProjectedGradient scalar_mobility(Eigen::Index dim, double m = 1.0) {
  return {Eigen::VectorXd::Constant(dim, m)};
}

inline void validate(const DynamicsMode& mode, Eigen::Index dim) {
  if (const auto* sd = std::get_if<SignDescent>(&mode)) {
    if (sd->gains.size() != dim) throw InvalidConfig("sign-descent gains have the wrong dimension");
    if ((sd->gains.array() <= 0.0).any() || !sd->gains.allFinite()) throw InvalidConfig("gains must be positive");
    if (sd->sliding == SlidingScheme::kBoundaryLayer && !(sd->layer_width > 0.0)) {
      throw InvalidConfig("boundary-layer width must be positive");
    }
  } else {
    const auto& pg = std::get<ProjectedGradient>(mode);
    if (pg.mobility.size() != dim) throw InvalidConfig("mobility has the wrong dimension");
    if ((pg.mobility.array() <= 0.0).any() || !pg.mobility.allFinite()) {
      throw InvalidConfig("mobility must be positive");
    }
  }
}

struct IntegratorSettings {
  double switching_tol = kSwitchingTolerance;
  double event_tol = 1e-10;            // switching-function value at a located event
  double boundary_event_tol = 1e-12;   // position error at a located face contact
  int max_events_per_step = 64;
  double convergence_tol = 1e-10;
  bool stop_on_convergence = true;
};

enum class Face : std::uint8_t { kFree, kLower, kUpper };

struct Regime {
  std::vector<int> sign;      // frozen sgn(d_j R); unused (zero) in projected-gradient mode
  std::vector<bool> sliding;  // on the switching manifold, or inside the boundary layer
  std::vector<Face> face;     // active face blocking outward motion

  /// Bit j: coordinate j sliding. Bit d+j: coordinate j held by a face.
  std::uint64_t mask() const {
    const std::size_t d = face.size();
    std::uint64_t m = 0;
    for (std::size_t j = 0; j < d; ++j) {
      if (sliding[j]) m |= std::uint64_t{1} << j;
      if (face[j] != Face::kFree) m |= std::uint64_t{1} << (d + j);
    }
    return m;
  }

  bool operator==(const Regime&) const = default;
};

enum class EventKind { kSwitchCross, kSlideEnter, kSlideExit, kBoundaryContact, kBoundaryRelease };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::kSwitchCross:
      return "SwitchCross";
    case EventKind::kSlideEnter:
      return "SlideEnter";
    case EventKind::kSlideExit:
      return "SlideExit";
    case EventKind::kBoundaryContact:
      return "BoundaryContact";
    case EventKind::kBoundaryRelease:
      return "BoundaryRelease";
  }
  return "?";
}

struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::kSwitchCross;
  int coordinate = 0;
};

struct Velocity {
  Eigen::VectorXd value;
  Regime regime;
};

struct SlideSolution {
  Eigen::VectorXd velocity;
  std::vector<bool> sliding;  // sliding set after removing coordinates whose equivalent control saturated
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kMaxConditionNumber = 1e12;
inline constexpr long kMaxSubstepsPerStep = 1'000'000;
inline constexpr double kMaxRk4Substeps = 16.0;
inline constexpr double kMaxRelativeMove = 0.1;

// Solves H_SS v_S = -H_SN v_N for the sliding set S, with v_N given.
inline Eigen::VectorXd equivalent_control(const Eigen::MatrixXd& hess, const std::vector<bool>& in_set,
                                          const Eigen::VectorXd& fixed) {
  std::vector<Eigen::Index> s;
  for (std::size_t j = 0; j < in_set.size(); ++j) {
    if (in_set[j]) s.push_back(static_cast<Eigen::Index>(j));
  }
  Eigen::VectorXd v = fixed;
  if (s.empty()) return v;
  const auto k = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd hss(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = 0; b < k; ++b) hss(a, b) = hess(s[a], s[b]);
    for (Eigen::Index c = 0; c < hess.cols(); ++c) {
      if (!in_set[static_cast<std::size_t>(c)]) rhs(a) -= hess(s[a], c) * fixed(c);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(hss, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(k - 1) > 0.0) || sv(0) / sv(k - 1) > kMaxConditionNumber) {
    std::ostringstream msg;
    msg << "equivalent-control block is singular (condition " << (sv(k - 1) > 0.0 ? sv(0) / sv(k - 1) : kInf)
        << ")";
    throw SingularSystem(msg.str());
  }
  const Eigen::VectorXd vs = svd.solve(rhs);
  for (Eigen::Index a = 0; a < k; ++a) v(s[a]) = vs(a);
  return v;
}

inline int sgn(double u) { return (u > 0.0) - (u < 0.0); }

// The vector field of the inclusion restricted to one regime, together with
// the regime classifier, switching monitors and the one-step integrators.
class RegimeField {
 public:
  RegimeField(const ResistanceModel& model, DynamicsMode mode, const IntegratorSettings& settings)
      : model_(model), mode_(std::move(mode)), settings_(settings) {}

  const ResistanceModel& model() const { return model_; }

  bool projected() const { return std::holds_alternative<ProjectedGradient>(mode_); }
  const SignDescent* sign_descent() const { return std::get_if<SignDescent>(&mode_); }
  bool equivalent_control() const {
    const auto* sd = sign_descent();
    return sd != nullptr && sd->sliding == SlidingScheme::kEquivalentControl;
  }
  bool boundary_layer() const {
    const auto* sd = sign_descent();
    return sd != nullptr && sd->sliding == SlidingScheme::kBoundaryLayer;
  }

  Regime classify(const Eigen::VectorXd& x) const {
    const Eigen::Index d = model_.dim();
    const Eigen::VectorXd g = model_.gradient(x);
    Regime reg;
    reg.sign.assign(static_cast<std::size_t>(d), 0);
    reg.sliding.assign(static_cast<std::size_t>(d), false);
    reg.face.assign(static_cast<std::size_t>(d), Face::kFree);
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto u = static_cast<std::size_t>(j);
      if (projected()) continue;
      reg.sign[u] = sgn(g(j));
      if (equivalent_control()) {
        reg.sliding[u] = std::abs(g(j)) <= settings_.switching_tol;
      } else {
        reg.sliding[u] = std::abs(g(j)) < sign_descent()->layer_width;
      }
    }
    assign_faces(reg, x, g);
    if (!equivalent_control()) return reg;

    // Drop coordinates whose equivalent control exceeds the gain: the
    // Filippov sliding condition fails there and the coordinate leaves.
    const Eigen::VectorXd& gains = sign_descent()->gains;
    for (Eigen::Index pass = 0; pass <= d; ++pass) {
      const Eigen::VectorXd v = evaluate(reg, x, g);
      bool changed = false;
      for (Eigen::Index j = 0; j < d; ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (reg.sliding[u] && reg.face[u] == Face::kFree && std::abs(v(j)) > gains(j) * (1.0 + 1e-12)) {
          reg.sliding[u] = false;
          reg.sign[u] = v(j) > 0.0 ? -1 : 1;
          changed = true;
        }
      }
      if (!changed) break;
      assign_faces(reg, x, g);
    }
    return reg;
  }

  Eigen::VectorXd evaluate(const Regime& reg, const Eigen::VectorXd& x) const {
    return evaluate(reg, x, model_.gradient(x));
  }

  Eigen::VectorXd evaluate(const Regime& reg, const Eigen::VectorXd& x, const Eigen::VectorXd& g) const {
    const Eigen::Index d = model_.dim();
    Eigen::VectorXd v(d);
    for (Eigen::Index j = 0; j < d; ++j) v(j) = candidate(reg, j, g);
    for (Eigen::Index j = 0; j < d; ++j) {
      if (reg.face[static_cast<std::size_t>(j)] != Face::kFree) v(j) = 0.0;
    }
    if (equivalent_control()) {
      std::vector<bool> solve_set(reg.sliding);
      bool any = false;
      for (Eigen::Index j = 0; j < d; ++j) {
        const auto u = static_cast<std::size_t>(j);
        solve_set[u] = reg.sliding[u] && reg.face[u] == Face::kFree;
        any = any || solve_set[u];
      }
      if (any) v = detail::equivalent_control(model_.gradient_jacobian(x), solve_set, v);
    }
    return v;
  }

  // Jacobian of the regime vector field (exact for projected gradient and
  // boundary layer; zero rows for saturated sign-descent coordinates).
  Eigen::MatrixXd field_jacobian(const Regime& reg, const Eigen::VectorXd& x) const {
    const Eigen::Index d = model_.dim();
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(d, d);
    if (equivalent_control()) return j;
    const Eigen::MatrixXd h = model_.gradient_jacobian(x);
    for (Eigen::Index r = 0; r < d; ++r) {
      const auto u = static_cast<std::size_t>(r);
      if (reg.face[u] != Face::kFree) continue;
      double scale = 0.0;
      if (const auto* pg = std::get_if<ProjectedGradient>(&mode_)) {
        scale = pg->mobility(r);
      } else if (reg.sliding[u]) {
        scale = sign_descent()->gains(r) / sign_descent()->layer_width;
      }
      for (Eigen::Index c = 0; c < d; ++c) {
        if (reg.face[static_cast<std::size_t>(c)] == Face::kFree) j(r, c) = -scale * h(r, c);
      }
    }
    return j;
  }

  bool has_layer(const Regime& reg) const {
    if (!boundary_layer()) return false;
    for (std::size_t j = 0; j < reg.sliding.size(); ++j) {
      if (reg.sliding[j] && reg.face[j] == Face::kFree) return true;
    }
    return false;
  }

  struct Substep {
    double tau;
    bool exponential;
  };

  // RK4 substeps satisfy tau * rho <= 1, rho the Gershgorin bound of the
  // regime Jacobian, and move no coordinate by more than 10% of its value.
  // When stiffness alone would force more than kMaxRk4Substeps pieces while
  // the motion over the whole remainder stays within that 10%, the remainder
  // is taken with one exponential Rosenbrock-Euler step instead. Active
  // boundary layers always use the exponential step.
  Substep plan(const Regime& reg, const Eigen::VectorXd& x, double remaining) const {
    if (has_layer(reg)) return {remaining, true};
    if (!projected()) return {remaining, false};  // constant field or equivalent control
    const Eigen::MatrixXd j = field_jacobian(reg, x);
    const double rho = j.cwiseAbs().rowwise().sum().maxCoeff();
    const Eigen::VectorXd f = evaluate(reg, x);
    const double speed = (f.array().abs() / x.array().abs()).maxCoeff();
    const double tau_move = speed > 0.0 ? kMaxRelativeMove / speed : kInf;
    const double tau_rk = std::min(rho > 0.0 ? 1.0 / rho : kInf, tau_move);
    if (tau_rk >= remaining) return {remaining, false};
    if (remaining > kMaxRk4Substeps * tau_rk && tau_move >= remaining) return {remaining, true};
    return {tau_rk, false};
  }

  Eigen::VectorXd advance(const Regime& reg, const Eigen::VectorXd& x, double tau, bool exponential) const {
    if (exponential) return exponential_euler(reg, x, tau);
    const Box& box = model_.box();
    const Eigen::VectorXd k1 = evaluate(reg, x);
    const Eigen::VectorXd k2 = evaluate(reg, box.clip(x + 0.5 * tau * k1));
    const Eigen::VectorXd k3 = evaluate(reg, box.clip(x + 0.5 * tau * k2));
    const Eigen::VectorXd k4 = evaluate(reg, box.clip(x + tau * k3));
    return x + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  // Switching monitors: positive while the regime is valid. Entries [0, d)
  // watch box faces, entries [d, 2d) watch switching functions. The second
  // vector holds the tolerance to which each crossing is located.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> monitors(const Regime& reg, const Eigen::VectorXd& x) const {
    const Eigen::Index d = model_.dim();
    const Box& box = model_.box();
    // Trial points may overshoot a face; switching functions are read at the
    // nearest admissible point, face monitors at the raw point.
    const Eigen::VectorXd inside = box.clip(x);
    const Eigen::VectorXd g = model_.gradient(inside);
    Eigen::VectorXd value = Eigen::VectorXd::Constant(2 * d, kInf);
    Eigen::VectorXd tol(2 * d);
    tol.head(d).setConstant(settings_.boundary_event_tol);
    tol.tail(d).setConstant(settings_.event_tol);
    Eigen::VectorXd v_eq;
    if (equivalent_control()) v_eq = evaluate(reg, inside, g);
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto u = static_cast<std::size_t>(j);
      switch (reg.face[u]) {
        case Face::kFree:
          value(j) = std::min(x(j) - box.lo()(j), box.hi()(j) - x(j));
          break;
        case Face::kLower:
          value(j) = g(j);
          tol(j) = settings_.event_tol;
          break;
        case Face::kUpper:
          value(j) = -g(j);
          tol(j) = settings_.event_tol;
          break;
      }
      if (projected() || reg.face[u] != Face::kFree) continue;
      const SignDescent& sd = *sign_descent();
      if (sd.sliding == SlidingScheme::kEquivalentControl) {
        value(d + j) = reg.sliding[u] ? sd.gains(j) - std::abs(v_eq(j)) : reg.sign[u] * g(j);
      } else {
        value(d + j) = reg.sliding[u] ? sd.layer_width - std::abs(g(j)) : reg.sign[u] * g(j) - sd.layer_width;
      }
    }
    return {value, tol};
  }

  // Newton correction of sliding coordinates back onto d_j R = 0.
  void project_sliding(const Regime& reg, Eigen::VectorXd& x) const {
    if (!equivalent_control()) return;
    bool any = false;
    for (std::size_t j = 0; j < reg.sliding.size(); ++j) any = any || (reg.sliding[j] && reg.face[j] == Face::kFree);
    if (!any) return;
    for (int iter = 0; iter < 2; ++iter) {
      const Eigen::VectorXd g = model_.gradient(x);
      const Eigen::MatrixXd h = model_.gradient_jacobian(x);
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (reg.sliding[u] && reg.face[u] == Face::kFree && h(j, j) > 0.0) x(j) -= g(j) / h(j, j);
      }
      x = model_.box().clip(x);
    }
  }

 private:
  double candidate(const Regime& reg, Eigen::Index j, const Eigen::VectorXd& g) const {
    const auto u = static_cast<std::size_t>(j);
    if (const auto* pg = std::get_if<ProjectedGradient>(&mode_)) return -pg->mobility(j) * g(j);
    const SignDescent& sd = *sign_descent();
    if (!reg.sliding[u]) return -sd.gains(j) * reg.sign[u];
    if (sd.sliding == SlidingScheme::kBoundaryLayer) {
      return -sd.gains(j) * std::clamp(g(j) / sd.layer_width, -1.0, 1.0);
    }
    return 0.0;
  }

  void assign_faces(Regime& reg, const Eigen::VectorXd& x, const Eigen::VectorXd& g) const {
    const Box& box = model_.box();
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const auto u = static_cast<std::size_t>(j);
      const double c = candidate(reg, j, g);
      if (box.at_lower(x, j) && c < 0.0) {
        reg.face[u] = Face::kLower;
      } else if (box.at_upper(x, j) && c > 0.0) {
        reg.face[u] = Face::kUpper;
      } else {
        reg.face[u] = Face::kFree;
      }
    }
  }

  // x + tau * phi1(tau J) f(x), via the exponential of the augmented matrix.
  Eigen::VectorXd exponential_euler(const Regime& reg, const Eigen::VectorXd& x, double tau) const {
    const Eigen::Index d = model_.dim();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(d + 1, d + 1);
    aug.topLeftCorner(d, d) = tau * field_jacobian(reg, x);
    aug.topRightCorner(d, 1) = tau * evaluate(reg, x);
    const Eigen::MatrixXd e = aug.exp();
    return x + e.topRightCorner(d, 1);
  }

  const ResistanceModel& model_;
  DynamicsMode mode_;
  IntegratorSettings settings_;
};

inline void append_transitions(const Regime& before, const Regime& after, bool sign_descent, double time,
                               std::vector<EventRecord>& out) {
  for (std::size_t j = 0; j < after.face.size(); ++j) {
    const int c = static_cast<int>(j);
    if (!before.sliding[j] && after.sliding[j]) out.push_back({time, EventKind::kSlideEnter, c});
    if (before.sliding[j] && !after.sliding[j]) out.push_back({time, EventKind::kSlideExit, c});
    if (before.face[j] == Face::kFree && after.face[j] != Face::kFree) {
      out.push_back({time, EventKind::kBoundaryContact, c});
    }
    if (before.face[j] != Face::kFree && after.face[j] == Face::kFree) {
      out.push_back({time, EventKind::kBoundaryRelease, c});
    }
    if (sign_descent && !before.sliding[j] && !after.sliding[j] && before.sign[j] * after.sign[j] < 0) {
      out.push_back({time, EventKind::kSwitchCross, c});
    }
  }
}

}  // namespace detail

/// Velocity selected from the inclusion at x, with the regime that produced it.
inline Velocity velocity(const DynamicsMode& mode, const ResistanceModel& model, const Eigen::VectorXd& x,
                         const IntegratorSettings& settings = {}) {
  validate(mode, model.dim());
  model.box().require_contains(x);
  const detail::RegimeField field(model, mode, settings);
  Regime reg = field.classify(x);
  Eigen::VectorXd v = field.evaluate(reg, x);
  return {std::move(v), std::move(reg)};
}

/// Equivalent-control velocity for the sliding set `active`: for j in the
/// set, sum_k H_jk v_k = 0 with v_k = -gain_k sgn(d_k R) outside the set.
/// Coordinates whose solved velocity exceeds their gain leave the set and
/// the system is re-solved.
inline SlideSolution slide_velocity(const SignDescent& mode, const ResistanceModel& model, const Eigen::VectorXd& x,
                                    std::vector<bool> active) {
  const Eigen::Index d = model.dim();
  if (static_cast<Eigen::Index>(active.size()) != d) throw DomainError("sliding set has the wrong dimension");
  model.box().require_contains(x);
  const Eigen::VectorXd g = model.gradient(x);
  const Eigen::MatrixXd h = model.gradient_jacobian(x);
  Eigen::VectorXd fixed(d);
  for (Eigen::Index j = 0; j < d; ++j) fixed(j) = -mode.gains(j) * detail::sgn(g(j));
  for (Eigen::Index pass = 0; pass <= d; ++pass) {
    Eigen::VectorXd v = detail::equivalent_control(h, active, fixed);
    bool changed = false;
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto u = static_cast<std::size_t>(j);
      if (active[u] && std::abs(v(j)) > mode.gains(j) * (1.0 + 1e-12)) {
        active[u] = false;
        fixed(j) = std::clamp(v(j), -mode.gains(j), mode.gains(j));
        changed = true;
      }
    }
    if (!changed) return {std::move(v), std::move(active)};
  }
  throw SingularSystem("equivalent control did not settle");
}

struct StepResult {
  Eigen::VectorXd state;
  std::vector<EventRecord> events;
  Regime regime;             // regime classified at `state`
  double max_clip = 0.0;     // largest box re-projection applied
  bool fallback = false;     // equivalent control was singular; boundary layer used
  long substeps = 0;
};

namespace detail {

inline StepResult step_with(const RegimeField& field, const Eigen::VectorXd& x, double t, double h,
                            const IntegratorSettings& settings) {
  const ResistanceModel& model = field.model();
  const Box& box = model.box();
  StepResult out;
  Eigen::VectorXd cur = box.clip(x);
  double remaining = h;
  double time = t;
  int landings = 0;
  Regime reg = field.classify(cur);

  auto settle = [&](Eigen::VectorXd next, const Regime& from) {
    Eigen::VectorXd clipped = box.clip(next);
    out.max_clip = std::max(out.max_clip, (clipped - next).lpNorm<Eigen::Infinity>());
    field.project_sliding(from, clipped);
    cur = std::move(clipped);
    Regime to = field.classify(cur);
    append_transitions(from, to, !field.projected(), time, out.events);
    reg = std::move(to);
  };

  while (remaining > 0.0) {
    if (++out.substeps > kMaxSubstepsPerStep) {
      throw StepFailure("step size collapsed below the stiffness limit; reduce h or widen the box");
    }
    const auto [tau_plan, exponential] = field.plan(reg, cur, remaining);
    const bool last = tau_plan >= remaining;
    const double tau = last ? remaining : tau_plan;
    const Eigen::VectorXd trial = field.advance(reg, cur, tau, exponential);
    const auto [m0, tol] = field.monitors(reg, cur);
    const auto crossed = [&](const Eigen::VectorXd& m) {
      for (Eigen::Index k = 0; k < m.size(); ++k) {
        if (m0(k) > 0.0 && std::isfinite(m0(k)) && m(k) < 0.0) return true;
      }
      return false;
    };
    Eigen::VectorXd m_hi = field.monitors(reg, trial).first;
    if (!crossed(m_hi)) {
      remaining = last ? 0.0 : remaining - tau;
      time += tau;
      settle(trial, reg);
      continue;
    }

    // Bisection for the earliest crossing inside (0, tau].
    double lo = 0.0, hi = 1.0;
    Eigen::VectorXd x_hi = trial;
    for (int iter = 0; iter < 200; ++iter) {
      bool tight = true;
      for (Eigen::Index k = 0; k < m_hi.size(); ++k) {
        if (m0(k) > 0.0 && std::isfinite(m0(k)) && m_hi(k) < -tol(k)) tight = false;
      }
      if (tight || (hi - lo) * tau <= std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(time))) {
        break;
      }
      const double mid = 0.5 * (lo + hi);
      Eigen::VectorXd x_mid = field.advance(reg, cur, mid * tau, exponential);
      Eigen::VectorXd m_mid = field.monitors(reg, x_mid).first;
      if (crossed(m_mid)) {
        hi = mid;
        x_hi = std::move(x_mid);
        m_hi = std::move(m_mid);
      } else {
        lo = mid;
      }
    }
    if (++landings > settings.max_events_per_step) {
      std::ostringstream msg;
      msg << "more than " << settings.max_events_per_step
          << " events inside one step (chattering); enable the boundary layer or reduce h";
      throw StepFailure(msg.str());
    }
    const double advanced = hi * tau;
    remaining = (last && hi == 1.0) ? 0.0 : std::max(0.0, remaining - advanced);
    time += advanced;
    settle(x_hi, reg);
  }
  out.state = cur;
  out.regime = reg;
  return out;
}

}  // namespace detail

/// One nominal step of length h starting at time t.
inline StepResult step(const DynamicsMode& mode, const ResistanceModel& model, const Eigen::VectorXd& x, double t,
                       double h, const IntegratorSettings& settings = {}) {
  validate(mode, model.dim());
  if (!(h > 0.0)) throw DomainError("step size must be positive");
  model.box().require_contains(x);
  try {
    return detail::step_with(detail::RegimeField(model, mode, settings), x, t, h, settings);
  } catch (const SingularSystem&) {
    const auto* sd = std::get_if<SignDescent>(&mode);
    if (sd == nullptr || sd->sliding != SlidingScheme::kEquivalentControl) throw;
    SignDescent layer = *sd;
    layer.sliding = SlidingScheme::kBoundaryLayer;
    StepResult res = detail::step_with(detail::RegimeField(model, layer, settings), x, t, h, settings);
    res.fallback = true;
    // Report the regime in the caller's scheme.
    res.regime = detail::RegimeField(model, mode, settings).classify(res.state);
    return res;
  }
}

enum class TerminationStatus { kCompleted, kConverged };

inline const char* to_string(TerminationStatus s) {
  return s == TerminationStatus::kConverged ? "converged" : "completed";
}

/// Time-stamped run. `resistance` holds the dissipated functional of the
/// model (see ResistanceModel::lyapunov); `imbalance` holds Psi.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> resistance;
  std::vector<double> imbalance;
  std::vector<std::uint64_t> regime_masks;
  std::vector<EventRecord> events;
  std::vector<std::size_t> event_sample;  // index of the sample closing the step that held each event
  TerminationStatus status = TerminationStatus::kCompleted;
  double max_clip = 0.0;
  long fallback_steps = 0;

  std::size_t size() const { return times.size(); }
  const Eigen::VectorXd& final_state() const { return states.back(); }
};

inline bool is_converged(const ResistanceModel& model, const Eigen::VectorXd& x, double tol) {
  const double stationarity = std::sqrt(kkt_residual(model.box(), x, model.gradient(x)));
  return stationarity < tol && model.imbalance(x) < tol;
}

inline Trajectory integrate(const DynamicsMode& mode, const ResistanceModel& model, const Eigen::VectorXd& x0,
                            double t_end, double h, const IntegratorSettings& settings = {}) {
  validate(mode, model.dim());
  if (!(t_end > 0.0)) throw DomainError("t_end must be positive");
  if (!(h > 0.0)) throw DomainError("step size must be positive");
  model.box().require_contains(x0);

  Trajectory traj;
  auto record = [&](double t, const Eigen::VectorXd& x, std::uint64_t mask) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.resistance.push_back(model.lyapunov(x));
    traj.imbalance.push_back(model.imbalance(x));
    traj.regime_masks.push_back(mask);
  };
  const Eigen::VectorXd start = model.box().clip(x0);
  record(0.0, start, detail::RegimeField(model, mode, settings).classify(start).mask());

  const auto steps = static_cast<long>(std::ceil(t_end / h - 1e-9));
  Eigen::VectorXd x = start;
  for (long k = 1; k <= steps; ++k) {
    const double t0 = static_cast<double>(k - 1) * h;
    const double t1 = (k == steps) ? t_end : static_cast<double>(k) * h;
    StepResult res;
    try {
      res = step(mode, model, x, t0, t1 - t0, settings);
    } catch (const StepFailure& e) {
      std::ostringstream msg;
      msg << e.what() << " [t = " << t0 << "]";
      throw StepFailure(msg.str());
    }
    x = res.state;
    record(t1, x, res.regime.mask());
    for (const EventRecord& ev : res.events) {
      traj.events.push_back(ev);
      traj.event_sample.push_back(traj.size() - 1);
    }
    traj.max_clip = std::max(traj.max_clip, res.max_clip);
    traj.fallback_steps += res.fallback ? 1 : 0;
    if (settings.stop_on_convergence && is_converged(model, x, settings.convergence_tol)) {
      traj.status = TerminationStatus::kConverged;
      break;
    }
  }
  if (traj.status != TerminationStatus::kConverged && is_converged(model, x, settings.convergence_tol)) {
    traj.status = TerminationStatus::kConverged;
  }
  return traj;
}

struct PairedRun {
  Trajectory first;
  Trajectory second;
  std::vector<double> separation;  // ||x(t_k) - y(t_k)|| on the common grid
};

inline PairedRun two_trajectory_run(const DynamicsMode& mode, const ResistanceModel& model,
                                    const Eigen::VectorXd& x0, const Eigen::VectorXd& y0, double t_end, double h,
                                    IntegratorSettings settings = {}) {
  settings.stop_on_convergence = false;
  PairedRun run{integrate(mode, model, x0, t_end, h, settings), integrate(mode, model, y0, t_end, h, settings), {}};
  run.separation.reserve(run.first.size());
  for (std::size_t k = 0; k < run.first.size(); ++k) {
    run.separation.push_back((run.first.states[k] - run.second.states[k]).norm());
  }
  return run;
}

}  // namespace constructal

#endif  // CONSTRUCTAL_DYNAMICS_HPP
