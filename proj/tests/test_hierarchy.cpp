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
#include <random>

#include "constructal/hierarchy.hpp"
#include "constructal/model.hpp"

namespace {

using constructal::ArchState;
using constructal::AssemblyConfig;
using constructal::GradientMode;
using constructal::TransportCosts;

TransportCosts canonical_costs() { return TransportCosts({1.0, 0.5, 0.25, 0.125}); }

ArchState canonical_optimum() {
  ArchState x;
  x.r = Eigen::Vector3d(1.0, 0.5, 0.5);
  x.n = Eigen::Vector2d(8.0, 16.0);
  return x;
}

// Resistance summed level by level from the cost formula, without the
// library's helpers.
double brute_resistance(const TransportCosts& k, const AssemblyConfig& cfg, const ArchState& x) {
  const int p = k.levels();
  double area = cfg.area;
  double total = 0.0;
  for (int i = 0; i < p; ++i) {
    if (i > 0) area *= x.n(i - 1);
    const double a = cfg.prefactors.alpha(i) * k[i];
    const double b = cfg.prefactors.beta(i) * k[i + 1];
    const double per_flow = std::sqrt(area) * (a * x.r(i) + b / x.r(i));
    total += area * per_flow;
  }
  const Eigen::VectorXd n_opt = constructal::optimal_branching(k);
  for (int i = 0; i < p - 1; ++i) total += 0.5 * cfg.kappa(i) * std::pow(x.n(i) - n_opt(i), 2);
  return total;
}

TEST(TransportCosts, RejectsNonDecreasingLadders) {
  EXPECT_THROW(TransportCosts({1.0}), constructal::InvalidConfig);
  EXPECT_THROW(TransportCosts({1.0, 1.0}), constructal::InvalidConfig);
  EXPECT_THROW(TransportCosts({1.0, 0.5, 0.7}), constructal::InvalidConfig);
  EXPECT_THROW(TransportCosts({1.0, -0.5}), constructal::InvalidConfig);
  EXPECT_NO_THROW(TransportCosts({2.0, 1.0}));
}

TEST(Hierarchy, CanonicalOptimumMatchesTable) {
  const auto k = canonical_costs();
  const auto cfg = constructal::default_assembly(k);
  const auto r = constructal::optimal_ratios(k, cfg);
  const auto n = constructal::optimal_branching(k);
  EXPECT_NEAR(r(0), 1.0, 1e-14);
  EXPECT_NEAR(r(1), 0.5, 1e-14);
  EXPECT_NEAR(r(2), 0.5, 1e-14);
  EXPECT_DOUBLE_EQ(n(0), 8.0);
  EXPECT_DOUBLE_EQ(n(1), 16.0);
  EXPECT_TRUE(r.isApprox(constructal::table_ratios(k), 1e-14));
}

TEST(Hierarchy, PerFlowMinimaAtOptimalAreas) {
  const auto k = canonical_costs();
  const auto cfg = constructal::default_assembly(k);
  EXPECT_NEAR(constructal::min_cost_per_flow(k, cfg, 1, 1.0), 0.5, 1e-14);
  EXPECT_NEAR(constructal::min_cost_per_flow(k, cfg, 2, 8.0), 1.0, 1e-14);
  EXPECT_NEAR(constructal::min_cost_per_flow(k, cfg, 3, 128.0), 2.0, 1e-14);
}

TEST(Hierarchy, MinimumAgreesWithDenseScan) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ratio(0.3, 0.9);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> kv{1.0};
    for (int i = 0; i < 3; ++i) kv.push_back(kv.back() * ratio(rng));
    const TransportCosts k(kv);
    const auto cfg = constructal::default_assembly(k);
    const auto r_opt = constructal::optimal_ratios(k, cfg);
    for (int level = 1; level <= 3; ++level) {
      const double area = 2.5 * level;
      double best = 1e300, where = 0.0;
      for (int g = 0; g <= 200000; ++g) {
        const double r = 0.01 + g * (3.0 - 0.01) / 200000;
        const double c = constructal::level_cost(k, cfg, level, area, r);
        if (c < best) {
          best = c;
          where = r;
        }
      }
      EXPECT_NEAR(where, r_opt(level - 1), 2e-5);
      EXPECT_NEAR(best, constructal::min_cost_per_flow(k, cfg, level, area), 1e-9);
    }
  }
}

TEST(Hierarchy, LevelOnePrefactors) {
  const auto pf = constructal::bejan_prefactors(canonical_costs());
  EXPECT_NEAR(pf.alpha(0), 0.25, 1e-15);
  EXPECT_NEAR(pf.beta(0), 0.5, 1e-15);
}

TEST(Hierarchy, ResistanceAtOptimum) {
  const auto k = canonical_costs();
  const auto cfg = constructal::default_assembly(k);
  const ArchState x = canonical_optimum();
  EXPECT_NEAR(constructal::resistance(k, cfg, x), 264.5, 1e-12);
  EXPECT_NEAR(brute_resistance(k, cfg, x), 264.5, 1e-12);
  EXPECT_NEAR(constructal::frozen_area_resistance(k, cfg, x), 264.5, 1e-12);
  EXPECT_NEAR(constructal::imbalance(k, cfg, x), 0.0, 1e-30);
}

TEST(Hierarchy, ResistanceIndependentOfGenerationRate) {
  const auto k = canonical_costs();
  auto cfg = constructal::default_assembly(k);
  ArchState x{Eigen::Vector3d(1.3, 0.7, 0.2), Eigen::Vector2d(5.0, 30.0)};
  const double base = constructal::resistance(k, cfg, x);
  cfg.gamma = 7.5;
  EXPECT_DOUBLE_EQ(constructal::resistance(k, cfg, x), base);
  EXPECT_NEAR(base, brute_resistance(k, cfg, x), 1e-10 * base);
}

TEST(Hierarchy, DerivedGeometry) {
  const auto k = canonical_costs();
  auto cfg = constructal::default_assembly(k);
  cfg.gamma = 2.0;
  const auto geo = constructal::derive_geometry(k, cfg, canonical_optimum());
  EXPECT_DOUBLE_EQ(geo.area(2), 128.0);
  EXPECT_DOUBLE_EQ(geo.flow(1), 16.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(geo.height(i) * geo.length(i), geo.area(i), 1e-12);
    EXPECT_NEAR(geo.height(i) / geo.length(i), canonical_optimum().r(i), 1e-12);
  }
}

TEST(Hierarchy, CoupledGradientMatchesFiniteDifferences) {
  const auto k = canonical_costs();
  const auto cfg = constructal::default_assembly(k);
  const ArchState x{Eigen::Vector3d(1.3, 0.7, 0.2), Eigen::Vector2d(5.0, 30.0)};
  const Eigen::VectorXd g = constructal::grad_resistance(k, cfg, x, GradientMode::kCoupled);
  const Eigen::VectorXd flat = x.flatten();
  for (int j = 0; j < 5; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(flat(j)));
    Eigen::VectorXd up = flat, dn = flat;
    up(j) += step;
    dn(j) -= step;
    const double fd = (brute_resistance(k, cfg, ArchState::unflatten(3, up)) -
                       brute_resistance(k, cfg, ArchState::unflatten(3, dn))) /
                      (2.0 * step);
    EXPECT_NEAR(g(j), fd, 1e-6 * std::max(1.0, std::abs(fd))) << "coordinate " << j;
  }
}

TEST(Hierarchy, DecoupledGradientKeepsOnlyDirectTerms) {
  const auto k = canonical_costs();
  const auto cfg = constructal::default_assembly(k);
  const ArchState x{Eigen::Vector3d(1.3, 0.7, 0.2), Eigen::Vector2d(5.0, 30.0)};
  const Eigen::VectorXd gd = constructal::grad_resistance(k, cfg, x, GradientMode::kDecoupled);
  const Eigen::VectorXd gc = constructal::grad_resistance(k, cfg, x, GradientMode::kCoupled);
  EXPECT_TRUE(gd.head(3).isApprox(gc.head(3), 1e-14));
  EXPECT_NEAR(gd(3), 5.0 - 8.0, 1e-14);
  EXPECT_NEAR(gd(4), 30.0 - 16.0, 1e-14);
}

TEST(Hierarchy, GradientJacobianMatchesFiniteDifferences) {
  const auto k = canonical_costs();
  const auto cfg = constructal::default_assembly(k);
  const ArchState x{Eigen::Vector3d(1.3, 0.7, 0.2), Eigen::Vector2d(5.0, 30.0)};
  for (auto mode : {GradientMode::kDecoupled, GradientMode::kCoupled}) {
    const Eigen::MatrixXd h = constructal::gradient_jacobian(k, cfg, x, mode);
    const Eigen::VectorXd flat = x.flatten();
    for (int j = 0; j < 5; ++j) {
      const double step = 1e-6 * std::max(1.0, std::abs(flat(j)));
      Eigen::VectorXd up = flat, dn = flat;
      up(j) += step;
      dn(j) -= step;
      const Eigen::VectorXd col = (constructal::grad_resistance(k, cfg, ArchState::unflatten(3, up), mode) -
                                   constructal::grad_resistance(k, cfg, ArchState::unflatten(3, dn), mode)) /
                                  (2.0 * step);
      for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(h(i, j), col(i), 1e-5 * std::max(1.0, std::abs(col(i)))) << to_string(mode) << " " << i << j;
      }
    }
  }
  const Eigen::MatrixXd hc = constructal::gradient_jacobian(k, cfg, x, GradientMode::kCoupled);
  EXPECT_TRUE(hc.isApprox(hc.transpose(), 1e-12));
}

TEST(Hierarchy, CurvatureAtOptimum) {
  const auto k = canonical_costs();
  const auto cfg = constructal::default_assembly(k);
  const Eigen::MatrixXd h = constructal::gradient_jacobian(k, cfg, canonical_optimum(), GradientMode::kDecoupled);
  // w_i * 2 b_i / r_i^3 with w_i = A_i^{3/2}: (1 * 2 * 0.25, 8^{1.5} * 2 * 0.125/sqrt(2) / 0.125, ...)
  Eigen::VectorXd expected(5);
  expected << 0.5, 32.0, 1024.0, 1.0, 1.0;
  EXPECT_TRUE(h.diagonal().isApprox(expected, 1e-12)) << h.diagonal().transpose();
  Eigen::MatrixXd off = h;
  off.diagonal().setZero();
  EXPECT_LT(off.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hierarchy, FrozenAreaFunctionalSharesTheDecoupledStationaryPoint) {
  const auto k = canonical_costs();
  const auto cfg = constructal::default_assembly(k);
  const ArchState x{Eigen::Vector3d(1.3, 0.7, 0.2), Eigen::Vector2d(5.0, 30.0)};
  const Eigen::VectorXd g = constructal::grad_resistance(k, cfg, x, GradientMode::kDecoupled);
  const Eigen::VectorXd flat = x.flatten();
  // The frozen-area functional's gradient is a positive rescaling of the
  // decoupled gradient in every coordinate.
  for (int j = 0; j < 5; ++j) {
    Eigen::VectorXd up = flat, dn = flat;
    up(j) += 1e-6;
    dn(j) -= 1e-6;
    const double fd = (constructal::frozen_area_resistance(k, cfg, ArchState::unflatten(3, up)) -
                       constructal::frozen_area_resistance(k, cfg, ArchState::unflatten(3, dn))) /
                      2e-6;
    EXPECT_GT(fd * g(j), 0.0) << j;
  }
}

TEST(Hierarchy, SingleLevel) {
  const TransportCosts k({1.0, 0.5});
  const auto cfg = constructal::default_assembly(k);
  EXPECT_EQ(cfg.kappa.size(), 0);
  EXPECT_NEAR(constructal::optimal_ratios(k, cfg)(0), 1.0, 1e-15);
  EXPECT_EQ(constructal::optimal_branching(k).size(), 0);
  const ArchState x{Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd(0)};
  EXPECT_NEAR(constructal::resistance(k, cfg, x), 0.5, 1e-15);
}

TEST(Hierarchy, ValidationRejectsBadAssemblies) {
  const auto k = canonical_costs();
  auto cfg = constructal::default_assembly(k);
  EXPECT_NO_THROW(constructal::validate(k, cfg));
  auto bad = cfg;
  bad.kappa = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(constructal::validate(k, bad), constructal::InvalidConfig);
  bad = cfg;
  bad.gamma = 0.0;
  EXPECT_THROW(constructal::validate(k, bad), constructal::InvalidConfig);
  bad = cfg;
  bad.bounds.n_hi = 12.0;  // excludes n_3 = 16
  EXPECT_THROW(constructal::validate(k, bad), constructal::InvalidConfig);
  bad = cfg;
  bad.bounds.r_lo = 0.6;  // excludes r = 0.5
  EXPECT_THROW(constructal::validate(k, bad), constructal::InvalidConfig);
}

TEST(Hierarchy, DomainErrors) {
  const auto k = canonical_costs();
  const auto cfg = constructal::default_assembly(k);
  EXPECT_THROW(constructal::level_cost(k, cfg, 0, 1.0, 1.0), constructal::DomainError);
  EXPECT_THROW(constructal::level_cost(k, cfg, 1, 1.0, 0.0), constructal::DomainError);
  ArchState x = canonical_optimum();
  x.n(0) = 0.5;
  EXPECT_THROW(constructal::resistance(k, cfg, x), constructal::DomainError);
  EXPECT_THROW(ArchState::unflatten(3, Eigen::VectorXd::Ones(4)), constructal::DomainError);
}

TEST(ResistanceModel, BranchingSubsystemFreezesRatios) {
  const auto k = canonical_costs();
  const constructal::ResistanceModel model(k, constructal::default_assembly(k), GradientMode::kDecoupled,
                                           constructal::Subsystem::kBranching);
  EXPECT_EQ(model.dim(), 2);
  EXPECT_TRUE(model.equilibrium().isApprox(Eigen::Vector2d(8.0, 16.0)));
  const Eigen::Vector2d z(4.0, 24.0);
  EXPECT_TRUE(model.gradient(z).isApprox(Eigen::Vector2d(-4.0, 8.0)));
  EXPECT_TRUE(model.gradient_jacobian(z).isApprox(Eigen::Matrix2d::Identity()));
  EXPECT_NEAR(model.lyapunov(z) - model.lyapunov(model.equilibrium()), 0.5 * model.imbalance(z), 1e-12);
  EXPECT_EQ(model.coordinate_name(1), "n_3");
}

}  // namespace
