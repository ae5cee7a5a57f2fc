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

// Bit-stable text output. Every floating-point value is written in the
// shortest form that round-trips (std::to_chars), so identical runs give
// identical bytes.

#ifndef CONSTRUCTAL_REPORT_HPP
#define CONSTRUCTAL_REPORT_HPP

#include <Eigen/Dense>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "constructal/dynamics.hpp"
#include "constructal/model.hpp"

namespace constructal {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline std::string format_vector(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_number(v(i));
  }
  return out + "]";
}

inline std::string format_hex(std::uint64_t v) {
  std::array<char, 24> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, 16);
  return "0x" + std::string(buf.data(), res.ptr);
}

/// Accumulates `key = value` lines in the same syntax the config reader accepts.
class KeyValueWriter {
 public:
  void comment(const std::string& text) { out_ += "# " + text + "\n"; }
  void blank() { out_ += "\n"; }
  void put(const std::string& key, double v) { line(key, format_number(v)); }
  void put(const std::string& key, long v) { line(key, std::to_string(v)); }
  void put(const std::string& key, int v) { line(key, std::to_string(v)); }
  void put(const std::string& key, std::uint64_t v) { line(key, std::to_string(v)); }
  void put(const std::string& key, bool v) { line(key, v ? "true" : "false"); }
  void put(const std::string& key, const char* v) { line(key, "\"" + std::string(v) + "\""); }
  void put(const std::string& key, const std::string& v) { line(key, "\"" + v + "\""); }
  void put(const std::string& key, const Eigen::VectorXd& v) { line(key, format_vector(v)); }

  const std::string& str() const { return out_; }

 private:
  void line(const std::string& key, const std::string& value) { out_ += key + " = " + value + "\n"; }
  std::string out_;
};

/// Trajectory as comma-separated text: t, r_1..r_p, n_2..n_p, R, Psi,
/// regime_mask, event. Every `stride`-th sample is written, plus every
/// sample closing a step that held events, plus the final sample.
inline std::string trajectory_csv(const Trajectory& traj, const ResistanceModel& model, long stride) {
  const int p = model.levels();
  std::string out = "t";
  for (int i = 1; i <= p; ++i) out += ",r_" + std::to_string(i);
  for (int i = 2; i <= p; ++i) out += ",n_" + std::to_string(i);
  out += ",R,Psi,regime_mask,event\n";

  std::vector<std::string> events(traj.size());
  for (std::size_t e = 0; e < traj.events.size(); ++e) {
    std::string& cell = events[traj.event_sample[e]];
    if (!cell.empty()) cell += ";";
    cell += std::string(to_string(traj.events[e].kind)) + ":" + std::to_string(traj.events[e].coordinate);
  }
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const bool keep = k % static_cast<std::size_t>(stride) == 0 || !events[k].empty() || k + 1 == traj.size();
    if (!keep) continue;
    out += format_number(traj.times[k]);
    const Eigen::VectorXd full = model.expand(traj.states[k]).flatten();
    for (Eigen::Index j = 0; j < full.size(); ++j) out += "," + format_number(full(j));
    out += "," + format_number(traj.resistance[k]) + "," + format_number(traj.imbalance[k]) + "," +
           format_hex(traj.regime_masks[k]) + "," + events[k] + "\n";
  }
  return out;
}

}  // namespace constructal

#endif  // CONSTRUCTAL_REPORT_HPP
