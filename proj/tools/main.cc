#include <unistd.h>

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "commands.h"

int main(int argc, char** argv) {
  using namespace phlift::cli;
  CLI::App app{"Polynomial lifting, verification, simulation and SOS controller design for port-Hamiltonian systems"};
  app.require_subcommand(1);

  std::string spec, out;
  auto* lift = app.add_subcommand("lift", "Lift a system to polynomial form");
  lift->add_option("spec", spec, "System spec file")->required();
  lift->add_option("-o,--out", out, "Lifted system file (manifest written to <out>.manifest)")->required();

  auto* verify = app.add_subcommand("verify", "Check the structure and identities of the lifted system");
  verify->add_option("spec", spec, "System spec file")->required();

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Integrate the lifted (and optionally the original) system");
  simulate->add_option("spec", spec, "System spec file")->required();
  simulate->add_option("--input", sim.input, "zero | sin:<amp>:<omega> | table:<path>");
  simulate->add_option("--t-end", sim.t_end, "Final time");
  simulate->add_option("--step", sim.step, "RK4 step");
  simulate->add_option("--csv", sim.csv, "CSV output path");
  simulate->add_flag("--both", sim.both, "Also integrate the original system and compare");

  DesignFlags des;
  auto* design = app.add_subcommand("design", "Synthesize an SOS energy-shaping controller");
  design->add_option("spec", spec, "System spec file")->required();
  design->add_option("--setpoint", des.setpoint, "Base setpoint, e.g. x2=4");
  design->add_option("--degree", des.degree, "Degree of the free part of H_d");
  design->add_option("--ball", des.ball, "Radius of the certified ball");
  design->add_option("--r", des.r, "Desired damping r");
  design->add_option("--delta", des.delta, "Convexity margin");
  design->add_option("--csv-dir", des.csv_dir, "Directory for the report and CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalidInput;
  }

  const Console io{std::cout, std::cerr, isatty(STDOUT_FILENO) && std::getenv("NO_COLOR") == nullptr};
  if (*lift) return cmd_lift(io, spec, out);
  if (*verify) return cmd_verify(io, spec);
  if (*simulate) return cmd_simulate(io, spec, sim);
  return cmd_design(io, spec, des);
}
