#pragma once

#include <iosfwd>
#include <optional>
#include <string>

namespace phlift::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInvalidInput = 1,  // parse, validation or flag errors; failed identities
  kNotLiftable = 2,   // unsupported primitive or closure bound exceeded
  kInfeasible = 3,    // infeasible SDP or inconsistent matching
  kLoopFailed = 4,    // closed-loop validation or integration failure
};

struct Console {
  std::ostream& out;
  std::ostream& err;
  bool color = false;
};

/// Writes the lifted system to `out_path` and its manifest next to it
/// (`out_path` + ".manifest").
int cmd_lift(const Console& io, const std::string& spec_path, const std::string& out_path);

int cmd_verify(const Console& io, const std::string& spec_path);

struct SimulateFlags {
  /// "zero", "sin:<amp>:<omega>" or "table:<path>"; [simulate] input, else zero.
  std::optional<std::string> input;
  std::optional<double> t_end, step;
  /// CSV path; with `both` the original and lifted runs go to
  /// <stem>.original.csv and <stem>.lifted.csv.
  std::optional<std::string> csv;
  bool both = false;
};

int cmd_simulate(const Console& io, const std::string& spec_path, const SimulateFlags& flags);

struct DesignFlags {
  /// Base setpoint, "x2=4" or "x1=0, x2=4"; unlisted coordinates are 0.
  std::optional<std::string> setpoint;
  std::optional<int> degree;
  std::optional<double> ball;
  std::optional<std::string> r;
  std::optional<double> delta;
  /// Directory for design_report.txt, hd.csv and closed_loop_<k>.csv.
  std::optional<std::string> csv_dir;
};

int cmd_design(const Console& io, const std::string& spec_path, const DesignFlags& flags);

}  // namespace phlift::cli
