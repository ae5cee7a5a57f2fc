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

#ifndef CONSTRUCTAL_ERROR_HPP
#define CONSTRUCTAL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace constructal {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of an operation (off-box state, r <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Configuration or type-invariant violation detected during validation.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

// Equivalent-control block of the Hessian is singular or badly conditioned.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

// Too many events inside one nominal step (chattering).
class StepFailure : public Error {
 public:
  using Error::Error;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace constructal

#endif  // CONSTRUCTAL_ERROR_HPP
