#include <CLI11.hpp>

#include "starnoma/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"starnoma: STAR-RIS MIMO-NOMA rate analysis and optimization"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  int threads = 1;
  bool verbose = false;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto* run = app.add_subcommand("run", "execute a scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "parallel sweep workers");
  run->add_option("--seed", seed, "override the Monte-Carlo seed")
      ->each([&](const std::string&) { seed_given = true; });
  run->add_flag("--verbose", verbose, "progress to stderr");

  CLI11_PARSE(app, argc, argv);

  try {
    starnoma::ScenarioSpec spec = starnoma::load_scenario(scenario_path);
    starnoma::RunOptions opts;
    opts.out_dir = out_dir;
    opts.threads = threads;
    opts.verbose = verbose;
    if (seed_given) opts.seed_override = seed;
    if (verbose) std::fprintf(stderr, "running scenario '%s'\n", spec.name.c_str());
    starnoma::RunArtifacts art = starnoma::run_scenario(spec, opts);
    const auto files = starnoma::write_artifacts(art, spec.output_stem, out_dir);
    for (const auto& f : files) std::printf("%s\n", f.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
