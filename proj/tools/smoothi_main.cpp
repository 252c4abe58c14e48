// Copyright 2026 The SmoothI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "smoothi/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = smoothi::cli;
  CLI::App app{"SmoothI learning-to-rank toolkit"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool strict_paper = false;
  app.add_option("--config", config_path, "flat JSON run config");
  app.add_option("--seed", seed, "overrides the config seed");
  app.add_flag("--strict-paper", strict_paper, "reject deviations from the published training recipe");
  app.require_subcommand(1);
  for (const char* name : {"train", "evaluate", "gradcheck", "verify-bounds", "sweep"}) {
    app.add_subcommand(name)->fallthrough();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  cli::RunConfig config;
  try {
    if (!config_path.empty()) config = cli::LoadRunConfig(config_path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return cli::ExitCodeFor(e);
  }
  if (seed) config.seed = *seed;

  auto ctx = cli::Context::FromEnvironment();
  ctx.strict_paper = strict_paper;
  ctx.out = &std::cout;
  return cli::RunCommand(app.get_subcommands().front()->get_name(), config, ctx, std::cerr);
}
