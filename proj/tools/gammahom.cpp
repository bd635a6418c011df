#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "gammahom/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Two-scale phase-field expansion toolkit"};
  app.get_formatter()->column_width(26);

  std::string scenario;
  std::string config_path;
  std::string out_dir = "gammahom_out";
  uint64_t seed = 1;
  int jobs = 1;
  bool check = false;

  app.add_option("scenario", scenario, "one of: dw whom h1 energy minimize recovery scaling gamma0 gamma1 dichotomy verify-assumptions")
      ->required()
      ->check(CLI::IsMember(gammahom::scenario_names()));
  app.add_option("--config", config_path, "JSON config file (defaults apply per field)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "seed for sampled queries and initializations");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "concurrent scenario items")->check(CLI::PositiveNumber);
  app.add_flag("--check", check, "regrade the stored outputs instead of recomputing");

  CLI11_PARSE(app, argc, argv);

  try {
    gammahom::json cfg = gammahom::json::object();
    if (!config_path.empty())
      cfg = gammahom::json::parse(gammahom::detail::read_text_file(config_path));

    const auto outcome = gammahom::run_scenario(scenario, cfg, seed, out_dir, jobs, check);
    for (const auto& c : outcome.checks)
      std::printf("[%s] %-28s measured %s bound %s\n", c.pass ? "PASS" : "FAIL",
                  c.name.c_str(), gammahom::fmt_g17(c.measured).c_str(),
                  gammahom::fmt_g17(c.bound).c_str());
    std::printf("%s: %s\n", scenario.c_str(), outcome.all_pass() ? "all checks pass" : "checks FAILED");
    return outcome.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
