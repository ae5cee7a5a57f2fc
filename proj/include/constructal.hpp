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

#ifndef CONSTRUCTAL_HPP
#define CONSTRUCTAL_HPP

#include "constructal/analysis.hpp"
#include "constructal/commands.hpp"
#include "constructal/config.hpp"
#include "constructal/dynamics.hpp"
#include "constructal/error.hpp"
#include "constructal/hierarchy.hpp"
#include "constructal/model.hpp"
#include "constructal/nonsmooth.hpp"
#include "constructal/report.hpp"

#endif  // CONSTRUCTAL_HPP
