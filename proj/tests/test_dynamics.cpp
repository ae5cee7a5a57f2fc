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

#include <gtest/gtest.h>

#include <cmath>

#include "constructal/dynamics.hpp"

namespace {

using constructal::GradientMode;
using constructal::ProjectedGradient;
using constructal::ResistanceModel;
using constructal::SignDescent;
using constructal::SlidingScheme;
using constructal::Subsystem;
using constructal::TransportCosts;

const TransportCosts kCosts({1.0, 0.5, 0.25, 0.125});

ResistanceModel canonical(GradientMode mode = GradientMode::kDecoupled, Subsystem sub = Subsystem::kFull) {
  return ResistanceModel(kCosts, constructal::default_assembly(kCosts), mode, sub);
}

Eigen::VectorXd canonical_start() {
  Eigen::VectorXd x(5);
  x << 1.5, 0.8, 0.3, 4.0, 24.0;
  return x;
}

TEST(Regime, MaskLayout) {
  constructal::Regime reg;
  reg.sign = {1, 0, -1};
  reg.sliding = {false, true, false};
  reg.face = {constructal::Face::kLower, constructal::Face::kFree, constructal::Face::kFree};
  EXPECT_EQ(reg.mask(), (1u << 1) | (1u << 3));
}

TEST(Validate, RejectsBadModes) {
  EXPECT_THROW(constructal::validate(constructal::DynamicsMode(constructal::scalar_mobility(3, -1.0)), 3),
               constructal::InvalidConfig);
  EXPECT_THROW(constructal::validate(constructal::DynamicsMode(constructal::unit_sign_descent(2)), 3),
               constructal::InvalidConfig);
  EXPECT_THROW(constructal::validate(
                   constructal::DynamicsMode(constructal::unit_sign_descent(3, SlidingScheme::kBoundaryLayer, 0.0)), 3),
               constructal::InvalidConfig);
}

TEST(Velocity, ProjectedGradientIsMinusGradientInTheInterior) {
  const auto model = canonical();
  const Eigen::VectorXd x = canonical_start();
  const auto v = constructal::velocity(constructal::scalar_mobility(5, 2.0), model, x);
  EXPECT_TRUE(v.value.isApprox(-2.0 * model.gradient(x)));
  EXPECT_EQ(v.regime.mask(), 0u);
}

TEST(Velocity, ProjectedGradientStopsAtAnOutwardFace) {
  const auto model = canonical();
  Eigen::VectorXd x = canonical_start();
  x(2) = 4.0;  // r_3 at its upper face; the flow wants to decrease it, which is inward
  x(3) = 1.0;  // n_2 at its lower face; n_2 < 8 so the flow pushes it up, also inward
  auto v = constructal::velocity(constructal::scalar_mobility(5), model, x);
  EXPECT_LT(v.value(2), 0.0);
  EXPECT_GT(v.value(3), 0.0);
  x(4) = 64.0;  // n_3 at its upper face, flow pushes it down: inward
  v = constructal::velocity(constructal::scalar_mobility(5), model, x);
  EXPECT_LT(v.value(4), 0.0);
  EXPECT_EQ(v.regime.mask(), 0u);
}

TEST(Velocity, SignDescentSaturatesAwayFromManifolds) {
  const auto model = canonical();
  const Eigen::VectorXd x = canonical_start();
  SignDescent sd = constructal::unit_sign_descent(5);
  sd.gains << 1.0, 2.0, 3.0, 4.0, 5.0;
  const auto v = constructal::velocity(sd, model, x);
  const Eigen::VectorXd g = model.gradient(x);
  for (int j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(v.value(j), -sd.gains(j) * (g(j) > 0 ? 1.0 : -1.0));
}

TEST(SlideVelocity, SingleLevelSlidesAtRest) {
  const TransportCosts k({1.0, 0.5});
  const ResistanceModel model(k, constructal::default_assembly(k));
  const auto sol = constructal::slide_velocity(constructal::unit_sign_descent(1), model,
                                               Eigen::VectorXd::Constant(1, 1.0), {true});
  EXPECT_EQ(sol.velocity(0), 0.0);
  EXPECT_TRUE(sol.sliding[0]);
}

TEST(SlideVelocity, DecoupledBranchingCoordinateStaysPut) {
  const auto model = canonical();
  Eigen::VectorXd x = canonical_start();
  x(3) = 8.0;
  const auto sol =
      constructal::slide_velocity(constructal::unit_sign_descent(5), model, x, {false, false, false, true, false});
  EXPECT_EQ(sol.velocity(3), 0.0);
  EXPECT_EQ(std::abs(sol.velocity(0)), 1.0);
}

TEST(SlideVelocity, CoupledSolveMatchesDirectSolve) {
  const auto model = canonical(GradientMode::kCoupled);
  Eigen::VectorXd x = canonical_start();
  const Eigen::MatrixXd h = model.gradient_jacobian(x);
  const Eigen::VectorXd g = model.gradient(x);
  const std::vector<bool> set = {true, false, false, false, false};
  const auto sol = constructal::slide_velocity(constructal::unit_sign_descent(5), model, x, set);
  // Row 0 of H v must vanish when the coordinate keeps sliding.
  if (sol.sliding[0]) {
    EXPECT_NEAR(h.row(0).dot(sol.velocity), 0.0, 1e-10);
  } else {
    EXPECT_DOUBLE_EQ(std::abs(sol.velocity(0)), 1.0);
  }
  for (int j = 1; j < 5; ++j) EXPECT_DOUBLE_EQ(sol.velocity(j), g(j) > 0 ? -1.0 : 1.0);
}

TEST(EquivalentControl, SingularBlockThrows) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2, 2);
  h(0, 1) = 1.0;
  EXPECT_THROW(constructal::detail::equivalent_control(h, {true, false}, Eigen::Vector2d(0.0, 1.0)),
               constructal::SingularSystem);
}

TEST(Step, EquilibriumIsFixed) {
  const auto model = canonical();
  const auto res = constructal::step(constructal::scalar_mobility(5), model, model.equilibrium(), 0.0, 1e-3);
  // The gradient vanishes at x* only up to rounding.
  EXPECT_LE((res.state - model.equilibrium()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE(res.events.empty());
}

TEST(Step, BranchingProjectedGradientIsExponential) {
  const auto model = canonical(GradientMode::kDecoupled, Subsystem::kBranching);
  const Eigen::Vector2d x(4.0, 24.0);
  for (double h : {1e-3, 1e-2, 1e-1}) {
    const auto res = constructal::step(constructal::scalar_mobility(2), model, x, 0.0, h);
    const Eigen::Vector2d exact = model.equilibrium() + (x - model.equilibrium()) * std::exp(-h);
    // RK4 local error for y' = -y is h^5/120 per unit amplitude.
    const double amplitude = (x - model.equilibrium()).norm();
    EXPECT_LE((res.state - exact).norm(), amplitude * std::pow(h, 5) / 120.0 * 1.01 + 1e-14) << h;
  }
}

TEST(Step, SaturatedSignDescentMovesAtGainSpeed) {
  const TransportCosts k({1.0, 0.5});
  const ResistanceModel model(k, constructal::default_assembly(k));
  SignDescent sd = constructal::unit_sign_descent(1);
  sd.gains(0) = 0.5;
  const auto res = constructal::step(sd, model, Eigen::VectorXd::Constant(1, 2.0), 0.0, 0.1);
  EXPECT_NEAR(res.state(0), 2.0 - 0.05, 1e-15);
}

TEST(Step, ChatteringGuardEscalates) {
  const auto model = canonical();
  constructal::IntegratorSettings settings;
  settings.max_events_per_step = 0;
  Eigen::VectorXd x = model.equilibrium();
  x(0) += 1e-4;  // reaches r_1's manifold within the first step
  EXPECT_THROW(constructal::step(constructal::unit_sign_descent(5, SlidingScheme::kEquivalentControl), model, x,
                                 0.0, 1e-3, settings),
               constructal::StepFailure);
}

TEST(Step, RejectsBadArguments) {
  const auto model = canonical();
  EXPECT_THROW(constructal::step(constructal::scalar_mobility(5), model, canonical_start(), 0.0, 0.0),
               constructal::DomainError);
  Eigen::VectorXd outside = canonical_start();
  outside(3) = 0.5;
  EXPECT_THROW(constructal::step(constructal::scalar_mobility(5), model, outside, 0.0, 1e-3),
               constructal::DomainError);
}

TEST(Integrate, EquilibriumGivesAConstantTrajectory) {
  const auto model = canonical();
  constructal::IntegratorSettings settings;
  settings.stop_on_convergence = false;
  const auto traj =
      constructal::integrate(constructal::scalar_mobility(5), model, model.equilibrium(), 0.1, 1e-3, settings);
  EXPECT_EQ(traj.size(), 101u);
  for (const auto& x : traj.states) ASSERT_LE((x - model.equilibrium()).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_TRUE(traj.events.empty());
}

TEST(Integrate, ProjectedGradientConvergesFromASlowPerturbation) {
  const auto model = canonical();
  Eigen::VectorXd x0 = model.equilibrium();
  x0(0) += 0.1;
  constructal::IntegratorSettings settings;
  settings.stop_on_convergence = false;
  const auto traj = constructal::integrate(constructal::scalar_mobility(5), model, x0, 40.0, 1e-3, settings);
  EXPECT_DOUBLE_EQ(traj.times.back(), 40.0);
  EXPECT_LE((traj.final_state() - model.equilibrium()).norm(), 1e-6);
  // A one-dimensional gradient flow approaches from the side it started on.
  for (const auto& x : traj.states) ASSERT_GT(x(0), 1.0);
  // Linear decay at the r_1 curvature 0.5 bounds the error from below.
  EXPECT_GE(traj.final_state()(0) - 1.0, 0.5 * 0.1 * std::exp(-20.0));
}

TEST(Integrate, DissipatesTheMonitoredFunctional) {
  for (auto mode : {GradientMode::kDecoupled, GradientMode::kCoupled}) {
    const auto model = canonical(mode);
    const auto traj = constructal::integrate(constructal::scalar_mobility(5), model, canonical_start(), 30.0, 1e-3);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
      ASSERT_LE(traj.resistance[k + 1], traj.resistance[k] + 1e-9 * (1.0 + std::abs(traj.resistance[k])))
          << to_string(mode) << " t=" << traj.times[k];
    }
  }
}

TEST(Integrate, StepHalvingIsConsistent) {
  const auto model = canonical();
  constructal::IntegratorSettings settings;
  settings.stop_on_convergence = false;
  const auto a = constructal::integrate(constructal::scalar_mobility(5), model, canonical_start(), 10.0, 1e-3, settings);
  const auto b = constructal::integrate(constructal::scalar_mobility(5), model, canonical_start(), 10.0, 5e-4, settings);
  EXPECT_LE((a.final_state() - b.final_state()).norm(), 1e-8);
}

TEST(Integrate, SignDescentReachesEachManifoldInFiniteTime) {
  const auto model = canonical();
  const Eigen::VectorXd x0 = canonical_start();
  const auto traj = constructal::integrate(constructal::unit_sign_descent(5, SlidingScheme::kEquivalentControl),
                                           model, x0, 20.0, 1e-3);
  EXPECT_EQ(traj.status, constructal::TerminationStatus::kConverged);
  std::vector<double> entered(5, -1.0);
  for (const auto& e : traj.events) {
    if (e.kind == constructal::EventKind::kSlideEnter && entered[e.coordinate] < 0) entered[e.coordinate] = e.time;
  }
  for (int j = 0; j < 5; ++j) {
    const double bound = std::abs(x0(j) - model.equilibrium()(j));  // unit gain
    ASSERT_GE(entered[j], 0.0) << j;
    EXPECT_LE(entered[j], 2.0 * bound) << j;
    EXPECT_NEAR(entered[j], bound, 1e-6) << j;
  }
}

TEST(Integrate, EquivalentControlKeepsSlidingCoordinatesOnTheirManifold) {
  const auto model = canonical();
  const auto traj = constructal::integrate(constructal::unit_sign_descent(5, SlidingScheme::kEquivalentControl),
                                           model, canonical_start(), 20.0, 1e-3);
  std::vector<std::size_t> since(5, traj.size());
  for (std::size_t e = 0; e < traj.events.size(); ++e) {
    const auto& ev = traj.events[e];
    if (ev.kind == constructal::EventKind::kSlideEnter) since[ev.coordinate] = std::min(since[ev.coordinate], traj.event_sample[e]);
    EXPECT_NE(ev.kind, constructal::EventKind::kSlideExit);
  }
  for (int j = 0; j < 5; ++j) {
    for (std::size_t k = since[j]; k < traj.size(); ++k) {
      ASSERT_LE(std::abs(model.gradient(traj.states[k])(j)), 1e-8) << j << " t=" << traj.times[k];
    }
  }
}

TEST(Integrate, BoundaryLayerConvergesNearTheOptimum) {
  const auto model = canonical();
  const auto traj = constructal::integrate(constructal::unit_sign_descent(5, SlidingScheme::kBoundaryLayer, 1e-4),
                                           model, canonical_start(), 30.0, 1e-3);
  EXPECT_LE((traj.final_state() - model.equilibrium()).norm(), 1e-3);
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    ASSERT_LE(traj.resistance[k + 1], traj.resistance[k] + 1e-9 * (1.0 + std::abs(traj.resistance[k])));
  }
}

TEST(Integrate, CoupledFlowSettlesOnAFace) {
  // The coupled optimum sits on n_2 = 1: the run must record the contact and
  // stay inside the box.
  const auto model = canonical(GradientMode::kCoupled);
  const auto traj = constructal::integrate(constructal::scalar_mobility(5), model, canonical_start(), 30.0, 1e-3);
  bool contact = false;
  for (const auto& e : traj.events) contact |= e.kind == constructal::EventKind::kBoundaryContact && e.coordinate == 3;
  EXPECT_TRUE(contact);
  for (const auto& x : traj.states) ASSERT_TRUE(model.box().contains(x, 0.0));
  EXPECT_DOUBLE_EQ(traj.final_state()(3), 1.0);
  EXPECT_LE(traj.max_clip, 1e-12);
}

TEST(Integrate, IsDeterministic) {
  const auto model = canonical();
  const auto mode = constructal::unit_sign_descent(5);
  const auto a = constructal::integrate(mode, model, canonical_start(), 5.0, 1e-3);
  const auto b = constructal::integrate(mode, model, canonical_start(), 5.0, 1e-3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) ASSERT_EQ(a.states[k], b.states[k]);
}

TEST(TwoTrajectory, IdenticalStartsNeverSeparate) {
  const auto model = canonical();
  const auto run = constructal::two_trajectory_run(constructal::scalar_mobility(5), model, canonical_start(),
                                                   canonical_start(), 2.0, 1e-3);
  for (double s : run.separation) EXPECT_EQ(s, 0.0);
}

TEST(TwoTrajectory, BranchingSeparationDecaysAtUnitRate) {
  const auto model = canonical(GradientMode::kDecoupled, Subsystem::kBranching);
  const auto run = constructal::two_trajectory_run(constructal::scalar_mobility(2), model, Eigen::Vector2d(4, 24),
                                                   Eigen::Vector2d(10, 12), 10.0, 1e-3);
  for (std::size_t k = 0; k < run.separation.size(); k += 100) {
    const double expected = run.separation[0] * std::exp(-run.first.times[k]);
    EXPECT_NEAR(run.separation[k], expected, 1e-4 * expected);
  }
}

}  // namespace
