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

// Run configuration: a flat `key = value` text format with dotted keys.
//
//   # comment
//   costs.K = [1.0, 0.5, 0.25, 0.125]
//   dynamics.mode = "projected_gradient"
//   integrate.h = 1e-3
//
// Values are numbers, booleans, double-quoted strings or bracketed numeric
// lists. Unknown and repeated keys are rejected.

#ifndef CONSTRUCTAL_CONFIG_HPP
#define CONSTRUCTAL_CONFIG_HPP

#include <Eigen/Dense>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "constructal/analysis.hpp"
#include "constructal/dynamics.hpp"
#include "constructal/error.hpp"
#include "constructal/hierarchy.hpp"
#include "constructal/model.hpp"

namespace constructal {

inline constexpr int kSchemaVersion = 1;

struct ConfigValue {
  std::variant<double, bool, std::string, std::vector<double>> data;
  std::string raw;  // the literal text, kept for exact integer parsing
  int line = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::string at_line(int line) { return "line " + std::to_string(line) + ": "; }

}  // namespace detail

/// Parses the flat key-value text into a key -> value map.
inline std::map<std::string, ConfigValue> parse_config_text(const std::string& text) {
  std::map<std::string, ConfigValue> out;
  std::istringstream in(text);
  std::string line_buf;
  int line = 0;
  while (std::getline(in, line_buf)) {
    ++line;
    // Strip a trailing comment that is not inside a string.
    bool quoted = false;
    std::size_t cut = line_buf.size();
    for (std::size_t i = 0; i < line_buf.size(); ++i) {
      if (line_buf[i] == '"') quoted = !quoted;
      if (line_buf[i] == '#' && !quoted) {
        cut = i;
        break;
      }
    }
    const std::string_view body = detail::trim(std::string_view(line_buf).substr(0, cut));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw InvalidConfig(detail::at_line(line) + "expected `key = value`");
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string_view value = detail::trim(body.substr(eq + 1));
    if (key.empty()) throw InvalidConfig(detail::at_line(line) + "empty key");
    for (char c : key) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) {
        throw InvalidConfig(detail::at_line(line) + "invalid character in key `" + key + "`");
      }
    }
    if (value.empty()) throw InvalidConfig(detail::at_line(line) + "missing value for `" + key + "`");
    ConfigValue cv;
    cv.raw = std::string(value);
    cv.line = line;
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"' || value.substr(1, value.size() - 2).find('"') != std::string::npos) {
        throw InvalidConfig(detail::at_line(line) + "malformed string for `" + key + "`");
      }
      cv.data = std::string(value.substr(1, value.size() - 2));
    } else if (value.front() == '[') {
      if (value.back() != ']') throw InvalidConfig(detail::at_line(line) + "unterminated list for `" + key + "`");
      std::vector<double> list;
      const std::string_view inner = detail::trim(value.substr(1, value.size() - 2));
      std::size_t pos = 0;
      while (!inner.empty() && pos <= inner.size()) {
        const auto comma = inner.find(',', pos);
        const std::string_view item = inner.substr(pos, comma == std::string_view::npos ? inner.npos : comma - pos);
        const auto num = detail::parse_number(item);
        if (!num) throw InvalidConfig(detail::at_line(line) + "list entry `" + std::string(detail::trim(item)) +
                                      "` of `" + key + "` is not a number");
        list.push_back(*num);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
      }
      cv.data = std::move(list);
    } else if (value == "true" || value == "false") {
      cv.data = (value == "true");
    } else if (const auto num = detail::parse_number(value)) {
      cv.data = *num;
    } else {
      throw InvalidConfig(detail::at_line(line) + "cannot parse value `" + std::string(value) + "` for `" + key +
                          "`");
    }
    if (!out.emplace(key, std::move(cv)).second) {
      throw InvalidConfig(detail::at_line(line) + "duplicate key `" + key + "`");
    }
  }
  return out;
}

struct InitialPair {
  Eigen::VectorXd x0;
  Eigen::VectorXd y0;
};

/// Fully validated run configuration.
struct RunConfig {
  std::vector<double> costs;
  AssemblyConfig assembly;
  std::string prefactor_scheme = "bejan";
  GradientMode gradient = GradientMode::kDecoupled;
  Subsystem subsystem = Subsystem::kFull;
  DynamicsMode dynamics;
  double mobility = 1.0;  // scalar mobility used for certification
  double h = 1e-3;
  double t_end = 100.0;
  IntegratorSettings settings;
  double dissipation_tol = kDissipationRelTol;
  std::optional<Eigen::VectorXd> initial;  // model coordinates
  SampleSpec sampling;
  std::optional<InitialPair> converge_pair;
  double converge_t_end = 40.0;
  long output_stride = 10;
  std::uint64_t seed = 0;

  ResistanceModel model() const { return ResistanceModel(TransportCosts(costs), assembly, gradient, subsystem); }

  /// The configured initial state, or one drawn uniformly from the box with `seed`.
  Eigen::VectorXd initial_state() const;
  InitialPair pair() const;
};

namespace detail {

inline Eigen::VectorXd uniform_in_box(const Box& box, std::mt19937_64& rng) {
  Eigen::VectorXd x(box.dim());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double u = static_cast<double>(rng() >> 11) * 0x1p-53;
    x(j) = box.lo()(j) + u * (box.hi()(j) - box.lo()(j));
  }
  return x;
}

class KeyReader {
 public:
  explicit KeyReader(std::map<std::string, ConfigValue> values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const ConfigValue* find(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  double number(const std::string& key, double fallback) {
    const ConfigValue* v = find(key);
    if (v == nullptr) return fallback;
    if (const auto* d = std::get_if<double>(&v->data)) return *d;
    throw InvalidConfig(at_line(v->line) + "`" + key + "` must be a number");
  }

  bool boolean(const std::string& key, bool fallback) {
    const ConfigValue* v = find(key);
    if (v == nullptr) return fallback;
    if (const auto* b = std::get_if<bool>(&v->data)) return *b;
    throw InvalidConfig(at_line(v->line) + "`" + key + "` must be true or false");
  }

  std::string text(const std::string& key, const std::string& fallback, const std::set<std::string>& allowed) {
    const ConfigValue* v = find(key);
    if (v == nullptr) return fallback;
    const auto* s = std::get_if<std::string>(&v->data);
    if (s == nullptr) throw InvalidConfig(at_line(v->line) + "`" + key + "` must be a quoted string");
    if (allowed.count(*s) == 0) {
      std::string options;
      for (const auto& a : allowed) options += (options.empty() ? "" : ", ") + a;
      throw InvalidConfig(at_line(v->line) + "`" + key + "` must be one of: " + options);
    }
    return *s;
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
    const ConfigValue* v = find(key);
    if (v == nullptr) return fallback;
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->raw.data(), v->raw.data() + v->raw.size(), out);
    if (ec != std::errc() || ptr != v->raw.data() + v->raw.size()) {
      throw InvalidConfig(at_line(v->line) + "`" + key + "` must be a non-negative integer");
    }
    return out;
  }

  std::optional<std::vector<double>> list(const std::string& key) {
    const ConfigValue* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (const auto* l = std::get_if<std::vector<double>>(&v->data)) return *l;
    throw InvalidConfig(at_line(v->line) + "`" + key + "` must be a list");
  }

  /// A list of `size` entries, or a scalar broadcast to that size.
  Eigen::VectorXd vector(const std::string& key, Eigen::Index size, double fallback) {
    const ConfigValue* v = find(key);
    if (v == nullptr) return Eigen::VectorXd::Constant(size, fallback);
    if (const auto* d = std::get_if<double>(&v->data)) return Eigen::VectorXd::Constant(size, *d);
    if (const auto* l = std::get_if<std::vector<double>>(&v->data)) {
      if (static_cast<Eigen::Index>(l->size()) != size) {
        throw InvalidConfig(at_line(v->line) + "`" + key + "` needs " + std::to_string(size) + " entries, got " +
                            std::to_string(l->size()));
      }
      return Eigen::Map<const Eigen::VectorXd>(l->data(), size);
    }
    throw InvalidConfig(at_line(v->line) + "`" + key + "` must be a number or a list");
  }

  void reject_unused() const {
    for (const auto& [key, value] : values_) {
      if (used_.count(key) == 0) throw InvalidConfig(at_line(value.line) + "unknown key `" + key + "`");
    }
  }

 private:
  std::map<std::string, ConfigValue> values_;
  std::set<std::string> used_;
};

inline void require_positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidConfig(what + " must be positive and finite");
}

// Reads a state given as `<prefix>.r` and `<prefix>.n` in model coordinates.
inline std::optional<Eigen::VectorXd> read_state(KeyReader& keys, const std::string& prefix, int p,
                                                 Subsystem subsystem) {
  const auto r = keys.list(prefix + ".r");
  const auto n = keys.list(prefix + ".n");
  if (!r && !n) return std::nullopt;
  if (subsystem == Subsystem::kBranching) {
    if (r) throw InvalidConfig("`" + prefix + ".r` is not used by the branching subsystem (r stays at its optimum)");
    if (static_cast<int>(n->size()) != p - 1) throw InvalidConfig("`" + prefix + ".n` needs p-1 entries");
    return Eigen::Map<const Eigen::VectorXd>(n->data(), p - 1);
  }
  if (!r || !n) {
    if (p == 1 && r && !n) return Eigen::Map<const Eigen::VectorXd>(r->data(), static_cast<Eigen::Index>(r->size()));
    throw InvalidConfig("`" + prefix + ".r` and `" + prefix + ".n` must be given together");
  }
  if (static_cast<int>(r->size()) != p || static_cast<int>(n->size()) != p - 1) {
    throw InvalidConfig("`" + prefix + "` needs p entries in r and p-1 entries in n");
  }
  ArchState s{Eigen::Map<const Eigen::VectorXd>(r->data(), p), Eigen::Map<const Eigen::VectorXd>(n->data(), p - 1)};
  return s.flatten();
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  detail::KeyReader keys(parse_config_text(text));
  RunConfig cfg;

  const auto version = keys.integer("schema_version", kSchemaVersion);
  if (version != kSchemaVersion) {
    throw InvalidConfig("unsupported schema_version " + std::to_string(version) + " (expected " +
                        std::to_string(kSchemaVersion) + ")");
  }
  cfg.seed = keys.integer("seed", 0);

  const auto k = keys.list("costs.K");
  if (!k) throw InvalidConfig("missing required key `costs.K`");
  cfg.costs = *k;
  const TransportCosts costs(cfg.costs);
  const int p = costs.levels();
  if (p > 16) throw InvalidConfig("at most 16 levels are supported");

  cfg.assembly.gamma = keys.number("assembly.gamma", 1.0);
  cfg.assembly.area = keys.number("assembly.A1", 1.0);
  cfg.prefactor_scheme = keys.text("assembly.prefactors", "bejan", {"bejan", "custom"});
  if (cfg.prefactor_scheme == "bejan") {
    if (keys.has("assembly.alpha") || keys.has("assembly.beta")) {
      throw InvalidConfig("`assembly.alpha`/`assembly.beta` need assembly.prefactors = \"custom\"");
    }
    cfg.assembly.prefactors = bejan_prefactors(costs);
  } else {
    if (!keys.has("assembly.alpha") || !keys.has("assembly.beta")) {
      throw InvalidConfig("custom prefactors need both `assembly.alpha` and `assembly.beta`");
    }
    cfg.assembly.prefactors.alpha = keys.vector("assembly.alpha", p, 0.0);
    cfg.assembly.prefactors.beta = keys.vector("assembly.beta", p, 0.0);
  }
  cfg.assembly.kappa = keys.vector("assembly.kappa", p - 1, 1.0);
  cfg.assembly.bounds.r_lo = keys.number("box.r_min", cfg.assembly.bounds.r_lo);
  cfg.assembly.bounds.r_hi = keys.number("box.r_max", cfg.assembly.bounds.r_hi);
  cfg.assembly.bounds.n_hi = keys.number("box.n_max", cfg.assembly.bounds.n_hi);

  cfg.gradient =
      keys.text("model.gradient", "decoupled", {"decoupled", "coupled"}) == "coupled" ? GradientMode::kCoupled
                                                                                       : GradientMode::kDecoupled;
  cfg.subsystem =
      keys.text("model.subsystem", "full", {"full", "branching"}) == "branching" ? Subsystem::kBranching
                                                                                 : Subsystem::kFull;
  const ResistanceModel model = cfg.model();  // validates costs, assembly and box
  const Eigen::Index dim = model.dim();

  const std::string mode = keys.text("dynamics.mode", "projected_gradient", {"projected_gradient", "sign_descent"});
  const double mobility = keys.number("dynamics.mobility", 1.0);
  detail::require_positive(mobility, "dynamics.mobility");
  cfg.mobility = mobility;
  const Eigen::VectorXd eta = keys.vector("dynamics.eta", p, 1.0);
  const Eigen::VectorXd zeta = keys.vector("dynamics.zeta", p - 1, 1.0);
  const std::string sliding =
      keys.text("dynamics.sliding", "boundary_layer", {"boundary_layer", "equivalent_control"});
  const double layer = keys.number("dynamics.layer_width", 1e-4);
  if (mode == "projected_gradient") {
    cfg.dynamics = scalar_mobility(dim, mobility);
  } else {
    SignDescent sd;
    sd.gains.resize(dim);
    if (cfg.subsystem == Subsystem::kBranching) {
      sd.gains = zeta;
    } else {
      sd.gains << eta, zeta;
    }
    sd.sliding = sliding == "equivalent_control" ? SlidingScheme::kEquivalentControl : SlidingScheme::kBoundaryLayer;
    sd.layer_width = layer;
    cfg.dynamics = sd;
  }
  validate(cfg.dynamics, dim);

  cfg.h = keys.number("integrate.h", 1e-3);
  cfg.t_end = keys.number("integrate.t_end", 100.0);
  cfg.settings.switching_tol = keys.number("integrate.switching_tol", kSwitchingTolerance);
  cfg.settings.event_tol = keys.number("integrate.event_tol", 1e-10);
  cfg.settings.convergence_tol = keys.number("integrate.convergence_tol", 1e-10);
  cfg.dissipation_tol = keys.number("integrate.dissipation_tol", kDissipationRelTol);
  detail::require_positive(cfg.h, "integrate.h");
  detail::require_positive(cfg.t_end, "integrate.t_end");
  detail::require_positive(cfg.settings.switching_tol, "integrate.switching_tol");
  detail::require_positive(cfg.settings.event_tol, "integrate.event_tol");
  detail::require_positive(cfg.settings.convergence_tol, "integrate.convergence_tol");
  detail::require_positive(cfg.dissipation_tol, "integrate.dissipation_tol");
  if (cfg.h > cfg.t_end) throw InvalidConfig("integrate.h must not exceed integrate.t_end");

  cfg.initial = detail::read_state(keys, "initial", p, cfg.subsystem);
  if (cfg.initial && !model.box().contains(*cfg.initial)) throw InvalidConfig("initial state lies outside the box");

  const double count = keys.number("sampling.count", 10000.0);
  if (!(count >= 1.0) || count != std::floor(count) || count > 1e9) {
    throw InvalidConfig("sampling.count must be a positive integer");
  }
  cfg.sampling.count = static_cast<long>(count);
  cfg.sampling.radius = keys.number("sampling.radius", 0.1);
  detail::require_positive(cfg.sampling.radius, "sampling.radius");
  if (cfg.sampling.radius >= 1.0) throw InvalidConfig("sampling.radius must be below 1");

  const auto x0 = detail::read_state(keys, "converge.x0", p, cfg.subsystem);
  const auto y0 = detail::read_state(keys, "converge.y0", p, cfg.subsystem);
  if (x0.has_value() != y0.has_value()) throw InvalidConfig("converge.x0 and converge.y0 must be given together");
  if (x0) {
    if (!model.box().contains(*x0) || !model.box().contains(*y0)) {
      throw InvalidConfig("convergence pair lies outside the box");
    }
    cfg.converge_pair = InitialPair{*x0, *y0};
  }
  cfg.converge_t_end = keys.number("converge.t_end", 40.0);
  detail::require_positive(cfg.converge_t_end, "converge.t_end");

  const double stride = keys.number("output.stride", 10.0);
  if (!(stride >= 1.0) || stride != std::floor(stride)) throw InvalidConfig("output.stride must be a positive integer");
  cfg.output_stride = static_cast<long>(stride);

  keys.reject_unused();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfig("cannot open config file `" + path + "`");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

inline Eigen::VectorXd RunConfig::initial_state() const {
  if (initial) return *initial;
  std::mt19937_64 rng(seed);
  return detail::uniform_in_box(model().box(), rng);
}

inline InitialPair RunConfig::pair() const {
  if (converge_pair) return *converge_pair;
  std::mt19937_64 rng(seed);
  const Box box = model().box();
  Eigen::VectorXd x0 = detail::uniform_in_box(box, rng);
  Eigen::VectorXd y0 = detail::uniform_in_box(box, rng);
  return {std::move(x0), std::move(y0)};
}

}  // namespace constructal

#endif  // CONSTRUCTAL_CONFIG_HPP
