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

// constructal: table | simulate | certify | converge

#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "constructal/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hierarchy evolution as a nonsmooth resistance-descent flow"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::string chosen;
  for (const auto& [name, help] : {std::pair{"table", "Compare the analytic optimum with a brute-force search"},
                                   std::pair{"simulate", "Integrate one trajectory and write trajectory.csv"},
                                   std::pair{"certify", "Sample a contraction certificate and check dissipation"},
                                   std::pair{"converge", "Fit the separation decay of a trajectory pair"}}) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "Run configuration file")->required();
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->callback([&chosen, name = std::string(name)] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : constructal::kExitConfig;
  }
  std::optional<std::uint64_t> seed_override;
  if (app.get_subcommand(chosen)->count("--seed") > 0) seed_override = seed;
  return constructal::run_command(chosen, config, out_dir, seed_override, std::cout, std::cerr);
}
