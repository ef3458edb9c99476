#include <CLI11.hpp>

#include "glsim/harness.hpp"
#include "glsim/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pseudospectral simulator for the stochastic Ginzburg-Landau equation "
               "with few-mode forcing"};
  app.set_version_flag("--version", std::string("glsim ") + glsim::kVersion);
  app.require_subcommand(1);

  const std::vector<std::string> commands = {"simulate", "check-modes", "tangent-check",
                                             "malliavin", "control-decay", "mixing",
                                             "lln", "clt", "stats"};
  glsim::RunOptions opts;
  std::string chosen;
  for (const auto& name : commands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "configuration file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out_dir_override, "output directory override");
    sub->add_option("--threads", opts.threads_override, "worker thread count");
    sub->callback([&chosen, name]() { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : glsim::kValidationError;
  }
  return glsim::run_command(chosen, opts);
}
