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

// Box cones, Moreau decomposition, set-valued sign map and the KKT residual.

#ifndef CONSTRUCTAL_NONSMOOTH_HPP
#define CONSTRUCTAL_NONSMOOTH_HPP

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "constructal/error.hpp"

namespace constructal {

inline constexpr double kBoundaryTolerance = 1e-9;
inline constexpr double kSwitchingTolerance = 1e-9;

class Box {
 public:
  Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size()) throw InvalidConfig("box bounds have different dimensions");
    for (Eigen::Index j = 0; j < lo_.size(); ++j) {
      if (!(lo_(j) < hi_(j))) throw InvalidConfig("box needs lo < hi in coordinate " + std::to_string(j));
    }
  }

  Eigen::Index dim() const { return lo_.size(); }
  const Eigen::VectorXd& lo() const { return lo_; }
  const Eigen::VectorXd& hi() const { return hi_; }

  bool contains(const Eigen::VectorXd& x, double tol = kBoundaryTolerance) const {
    return x.size() == dim() && ((x - lo_).array() >= -tol).all() && ((hi_ - x).array() >= -tol).all();
  }

  bool at_lower(const Eigen::VectorXd& x, Eigen::Index j) const { return x(j) <= lo_(j) + kBoundaryTolerance; }
  bool at_upper(const Eigen::VectorXd& x, Eigen::Index j) const { return x(j) >= hi_(j) - kBoundaryTolerance; }

  bool interior(const Eigen::VectorXd& x) const {
    for (Eigen::Index j = 0; j < dim(); ++j) {
      if (at_lower(x, j) || at_upper(x, j)) return false;
    }
    return true;
  }

  Eigen::VectorXd clip(const Eigen::VectorXd& x) const { return x.cwiseMax(lo_).cwiseMin(hi_); }

  void require_contains(const Eigen::VectorXd& x) const {
    if (x.size() != dim()) {
      throw DomainError("point has dimension " + std::to_string(x.size()) + ", box has " + std::to_string(dim()));
    }
    if (!contains(x)) throw DomainError("point lies outside the admissible box");
  }

 private:
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
};

/// Euclidean projection of v onto the tangent cone of the box at x.
inline Eigen::VectorXd tangent_project(const Box& box, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
  box.require_contains(x);
  Eigen::VectorXd out = v;
  for (Eigen::Index j = 0; j < box.dim(); ++j) {
    if ((box.at_lower(x, j) && v(j) < 0.0) || (box.at_upper(x, j) && v(j) > 0.0)) out(j) = 0.0;
  }
  return out;
}

struct ConeDecomposition {
  Eigen::VectorXd tangent;  // component in T_K(x)
  Eigen::VectorXd normal;   // component in N_K(x)
};

inline ConeDecomposition moreau_decompose(const Box& box, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
  ConeDecomposition dec;
  dec.tangent = tangent_project(box, x, v);
  dec.normal = v - dec.tangent;
  return dec;
}

/// Squared distance from 0 to g + N_K(x); zero exactly at constrained
/// stationary points.
inline double kkt_residual(const Box& box, const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
  return tangent_project(box, x, -g).squaredNorm();
}

enum class SignSet { kMinusOne, kPlusOne, kInterval };

/// Componentwise set-valued sign map in the descent orientation:
/// {-1} where u_j > tol, {+1} where u_j < -tol, [-1, 1] otherwise.
inline std::vector<SignSet> sign_set(const Eigen::VectorXd& u, double tol = kSwitchingTolerance) {
  std::vector<SignSet> out(static_cast<std::size_t>(u.size()));
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    if (u(j) > tol) {
      out[j] = SignSet::kMinusOne;
    } else if (u(j) < -tol) {
      out[j] = SignSet::kPlusOne;
    } else {
      out[j] = SignSet::kInterval;
    }
  }
  return out;
}

inline bool contains(SignSet s, double value) {
  switch (s) {
    case SignSet::kMinusOne:
      return value == -1.0;
    case SignSet::kPlusOne:
      return value == 1.0;
    case SignSet::kInterval:
      return value >= -1.0 && value <= 1.0;
  }
  return false;
}

/// Clarke directional derivative of a function smooth at x: <grad, v>.
inline double clarke_directional(const Eigen::VectorXd& grad, const Eigen::VectorXd& v) { return grad.dot(v); }

/// sup over the sign-descent velocity set of <grad, v> at an interior point.
inline double max_sign_descent_derivative(const Eigen::VectorXd& grad, const Eigen::VectorXd& gains) {
  return -(gains.array() * grad.array().abs()).sum();
}

}  // namespace constructal

#endif  // CONSTRUCTAL_NONSMOOTH_HPP
