#include <exception>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "faceattr/cli.hpp"
#include "faceattr/errors.hpp"

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string root;
  long seed = -1;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_file,
                  "config file with 'key = value' lines");
  cmd->add_option("-D,--set", opts.overrides,
                  "override a config key, key=value (repeatable)");
  cmd->add_option("--root", opts.root, "base directory for relative paths");
  cmd->add_option("--seed", opts.seed, "random seed");
  cmd->add_option("--workers", opts.workers, "worker thread count");
}

faceattr::RunConfig build_config(const CommonOptions& opts) {
  faceattr::RunConfig cfg;
  if (!opts.config_file.empty()) cfg.load_file(opts.config_file);
  for (const std::string& assignment : opts.overrides) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
      throw faceattr::ConfigError("override '" + assignment +
                                  "' is not key=value");
    cfg.set(assignment.substr(0, eq), assignment.substr(eq + 1));
  }
  if (!opts.root.empty()) cfg.root = opts.root;
  if (opts.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed);
  if (opts.workers > 0) cfg.workers = opts.workers;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"facial-attribute pipeline: alignment, augmentation, "
               "training, test-time augmentation and evaluation"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const faceattr::RunConfig&);
  };
  const Command commands[] = {
      {"align", "write aligned crops for every annotated record",
       faceattr::cmd_align},
      {"augment-preview", "render a contact sheet of perturbed crops",
       faceattr::cmd_augment_preview},
      {"synth", "generate the synthetic benchmark dataset",
       faceattr::cmd_synth},
      {"train", "train a reference network", faceattr::cmd_train},
      {"predict", "write attribute scores for a partition",
       faceattr::cmd_predict},
      {"evaluate", "emit the per-attribute error table",
       faceattr::cmd_evaluate},
      {"ttest", "two-sided paired t-test between two runs",
       faceattr::cmd_ttest},
  };

  std::vector<CommonOptions> opts(std::size(commands));
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    CLI::App* cmd = app.add_subcommand(commands[i].name, commands[i].help);
    add_common(cmd, opts[i]);
    cmd->callback([&, i] {
      faceattr::RunConfig cfg = build_config(opts[i]);
      std::exit(commands[i].run(cfg));
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const faceattr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
