// Copyright 2026 The hubbard_phonon Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include "hubbard_phonon/cli.hpp"

int main(int argc, char** argv) {
  namespace hc = hubbard_phonon::cli;
  CLI::App app{"Hubbard model coupled to phonons: spectra, sweeps, identity checks and infrared limits"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", hc::kVersion);

  std::string config;
  std::string out;
  hc::RunFlags flags;
  for (const char* name : {"spectrum", "sweep", "verify", "ir"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "configuration document (JSON)")->required();
    sub->add_option("--out", out, "output directory (default: output.directory of the config)");
    sub->add_flag("--strict", flags.strict, "treat failed sweep points as an error");
    sub->add_option("--threads", flags.threads, "worker threads for sweeps")->check(CLI::Range(1, 256));
    sub->add_option("--seed", flags.seed, "seed for random test data");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : hc::kInvalid;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  if (!out.empty()) flags.out = out;
  return hc::run(sub, config, flags, !out.empty());
}
