// Command-line front-end for the anisotropic curvature-flow library.
//
//   wulff run      --config cfg.txt [--out DIR] [--seed N] [--quiet]
//   wulff check    ...   invariant battery for an energy/body pair
//   wulff af       ...   isoperimetric-deficit slack over random bodies
//   wulff spectrum ...   spectral gap of the linearized operator
//   wulff oracle   ...   Monte-Carlo cross-check of mixed volumes
//
// Exit codes: 0 success/converged, 1 config or numerical failure,
// 2 flow time budget exhausted, 3 convexity lost.

#include <cstdio>
#include <exception>
#include <functional>

#include <CLI11.hpp>
#include <wulff/cli.hpp>

namespace {

void add_common(CLI::App* cmd, wulff::CliOptions& opt) {
  cmd->add_option("--config", opt.config, "path to a key=value config file")
      ->required();
  cmd->add_option("--out", opt.out, "output directory (created if missing)")
      ->capture_default_str();
  auto* seed = cmd->add_option("--seed", opt.seed, "override the config's RNG seed");
  cmd->add_flag("--quiet", opt.quiet, "suppress progress output");
  cmd->final_callback([seed, &opt] { opt.has_seed = seed->count() > 0; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"locally constrained anisotropic curvature flow toolkit"};
  app.require_subcommand(1);

  wulff::CliOptions opt;
  int exit_code = 0;
  auto hook = [&](const char* name, int (*fn)(const wulff::CliOptions&),
                  const char* help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, opt);
    cmd->callback([fn, &opt, &exit_code] { exit_code = fn(opt); });
  };
  hook("run", wulff::cmd_run, "integrate the flow and record diagnostics");
  hook("check", wulff::cmd_check, "run the invariant check battery");
  hook("af", wulff::cmd_af, "isoperimetric-deficit slack on random bodies");
  hook("spectrum", wulff::cmd_spectrum, "spectral gap of the linearized operator");
  hook("oracle", wulff::cmd_oracle, "Monte-Carlo mixed-volume cross-check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return exit_code;
}
