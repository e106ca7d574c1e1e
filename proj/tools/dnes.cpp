#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dnes/commands.hpp"

namespace {

int thread_count() {
  if (const char* env = std::getenv("DNES_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring DNES_THREADS='" << env << "'\n";
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nash-equilibrium seeking with deceptive players"};
  app.require_subcommand(1);
  std::string file, out_dir;
  std::vector<std::string> sets;
  for (const char* name : {"analyze", "simulate", "sweep"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("file", file, "scenario file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--set", sets, "override section.key=value")->allow_extra_args(false);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return dnes::run_command(command, file, out_dir, sets, thread_count(), std::cout, std::cerr);
}
