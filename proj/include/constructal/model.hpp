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

#ifndef CONSTRUCTAL_MODEL_HPP
#define CONSTRUCTAL_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "constructal/hierarchy.hpp"
#include "constructal/nonsmooth.hpp"

namespace constructal {

/// Which coordinates evolve. kBranching keeps every r_i frozen at its
/// optimum and evolves only n_2..n_p.
enum class Subsystem { kFull, kBranching };

inline const char* to_string(Subsystem s) { return s == Subsystem::kFull ? "full" : "branching"; }

/// The resistance functional bound to a cost ladder, gradient mode and
/// subsystem, expressed in "model coordinates" z: the full state x for
/// kFull, the branching numbers for kBranching.
class ResistanceModel {
 public:
  ResistanceModel(TransportCosts costs, AssemblyConfig cfg, GradientMode mode = GradientMode::kDecoupled,
                  Subsystem subsystem = Subsystem::kFull)
      : costs_(std::move(costs)), cfg_(std::move(cfg)), mode_(mode), subsystem_(subsystem), box_(make_box()) {
    validate(costs_, cfg_);
    if (subsystem_ == Subsystem::kBranching && costs_.levels() < 2) {
      throw InvalidConfig("the branching subsystem needs p >= 2");
    }
    const ArchState opt = optimal_state(costs_, cfg_);
    frozen_r_ = opt.r;
    equilibrium_ = reduce(opt);
  }

  const TransportCosts& costs() const { return costs_; }
  const AssemblyConfig& assembly() const { return cfg_; }
  GradientMode gradient_mode() const { return mode_; }
  Subsystem subsystem() const { return subsystem_; }
  int levels() const { return costs_.levels(); }
  Eigen::Index dim() const { return box_.dim(); }
  const Box& box() const { return box_; }

  /// Optimal architecture in model coordinates.
  const Eigen::VectorXd& equilibrium() const { return equilibrium_; }

  ArchState expand(const Eigen::VectorXd& z) const {
    if (z.size() != dim()) throw DomainError("model state has the wrong dimension");
    if (subsystem_ == Subsystem::kFull) return ArchState::unflatten(levels(), z);
    return {frozen_r_, z};
  }

  Eigen::VectorXd reduce(const ArchState& x) const {
    if (subsystem_ == Subsystem::kFull) return x.flatten();
    return x.n;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const {
    const Eigen::VectorXd g = grad_resistance(costs_, cfg_, expand(z), mode_);
    return subsystem_ == Subsystem::kFull ? g : Eigen::VectorXd(g.tail(levels() - 1));
  }

  /// Jacobian of `gradient` (the Hessian in coupled mode).
  Eigen::MatrixXd gradient_jacobian(const Eigen::VectorXd& z) const {
    const Eigen::MatrixXd h = constructal::gradient_jacobian(costs_, cfg_, expand(z), mode_);
    if (subsystem_ == Subsystem::kFull) return h;
    const int m = levels() - 1;
    return h.bottomRightCorner(m, m);
  }

  /// Literal resistance R of the full state.
  double resistance(const Eigen::VectorXd& z) const { return constructal::resistance(costs_, cfg_, expand(z)); }

  /// The functional that the dynamics must dissipate: R itself in coupled
  /// mode, R with areas frozen at n_opt in decoupled mode.
  double lyapunov(const Eigen::VectorXd& z) const {
    return mode_ == GradientMode::kCoupled ? resistance(z) : frozen_area_resistance(costs_, cfg_, expand(z));
  }

  double imbalance(const Eigen::VectorXd& z) const { return (z - equilibrium_).squaredNorm(); }

  std::string coordinate_name(Eigen::Index j) const {
    const int p = levels();
    if (subsystem_ == Subsystem::kBranching) return "n_" + std::to_string(j + 2);
    return j < p ? "r_" + std::to_string(j + 1) : "n_" + std::to_string(j - p + 2);
  }

 private:
  Box make_box() const {
    const int p = costs_.levels();
    const AdmissibleBounds& b = cfg_.bounds;
    if (subsystem_ == Subsystem::kBranching) {
      return Box(Eigen::VectorXd::Ones(p - 1), Eigen::VectorXd::Constant(p - 1, b.n_hi));
    }
    Eigen::VectorXd lo(2 * p - 1), hi(2 * p - 1);
    lo << Eigen::VectorXd::Constant(p, b.r_lo), Eigen::VectorXd::Ones(p - 1);
    hi << Eigen::VectorXd::Constant(p, b.r_hi), Eigen::VectorXd::Constant(p - 1, b.n_hi);
    return Box(lo, hi);
  }

  TransportCosts costs_;
  AssemblyConfig cfg_;
  GradientMode mode_;
  Subsystem subsystem_;
  Box box_;
  Eigen::VectorXd frozen_r_;
  Eigen::VectorXd equilibrium_;
};

}  // namespace constructal

#endif  // CONSTRUCTAL_MODEL_HPP
