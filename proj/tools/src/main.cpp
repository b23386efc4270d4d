#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace hqf::cli;
  CLI::App app{"Harmonic quaternion field experiments"};
  app.require_subcommand(1);
  std::string config, out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;

  const std::map<std::string, std::string> about = {
      {"solve", "Dirichlet solve or harmonic extension"},
      {"green", "Green function columns and Poisson kernels"},
      {"control", "rank certificate and control synthesis at interior points"},
      {"separate", "quaternion field with prescribed values at two points"},
      {"jets", "2-jet rank study and jet control"},
      {"density", "frame cover, representation and algebra approximation"},
      {"recover", "metric recovery from harmonic samples"},
      {"analyze", "Dirichlet fields, uniqueness probe, surface and circulation checks"},
      {"convergence", "refinement study over several resolutions"}};
  for (const auto& name : subcommand_names()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config, "JSON experiment config")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--jobs", jobs, "worker threads for independent solves")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "overrides the config seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitSchema;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  return run_file(name, config, {out, jobs, seed}, std::cerr);
}
