#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "chdf/config.hpp"
#include "chdf/driver.hpp"
#include "chdf/grid.hpp"

namespace {

int apply_thread_env() {
  const char* env = std::getenv("CHDF_THREADS");
  if (!env || !*env) return 0;
  try {
    std::size_t used = 0;
    const int n = std::stoi(env, &used);
    if (used != std::string(env).size() || n < 0) throw std::invalid_argument(env);
    chdf::set_thread_cap(n);
  } catch (const std::exception&) {
    std::cerr << "CHDF_THREADS must be a non-negative integer, got '" << env << "'\n";
    return chdf::kExitValidation;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cahn-Hilliard / Darcy-Forchheimer solver with a soluble surfactant"};
  app.require_subcommand(1);
  std::string config_path, output_dir;

  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("config", config_path, "configuration file")->required();
    sub->add_option("--output-dir", output_dir, "overrides [output] directory");
    return sub;
  };
  CLI::App* run = add("run", "time-step the configured scenario and write the ledger");
  CLI::App* check = add("check", "run the invariant suite and print a pass/fail table");
  CLI::App* steady = add("steady", "solve the stationary problem from the configured seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : chdf::kExitValidation;
  }
  if (const int code = apply_thread_env()) return code;

  chdf::RunConfig cfg;
  try {
    cfg = chdf::load_config(config_path);
  } catch (const chdf::Error& e) {
    std::cerr << e.what() << "\n";
    return chdf::exit_code_for(e);
  }
  if (!output_dir.empty()) cfg.output.directory = output_dir;

  if (*run) return chdf::run(cfg, std::cout);
  if (*check) return chdf::check(cfg, std::cout);
  if (*steady) return chdf::steady(cfg, std::cout);
  return chdf::kExitValidation;
}
