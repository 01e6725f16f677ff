#include "commands.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "phlift/expr/parser.h"
#include "phlift/ph/lifted_io.h"
#include "phlift/sim/simulate.h"
#include "phlift/sos/design.h"
#include "spec_file.h"

namespace phlift::cli {

namespace {

namespace fs = std::filesystem;

std::string verdict(const Console& io, bool ok) {
  if (!io.color) return ok ? "PASS" : "FAIL";
  return ok ? "\033[32mPASS\033[0m" : "\033[31mFAIL\033[0m";
}

// Loads, validates and lifts; returns an exit code on failure.
struct Loaded {
  SystemSpecFile file;
  LiftedPHSystem lifted;
};

int load(const Console& io, const std::string& path, Loaded& out, bool require_valid = true) {
  try {
    out.file = load_spec_file(path);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  if (require_valid) {
    const auto rep = validate(out.file.system);
    if (!rep.ok()) {
      io.err << "error: system fails validation\n" << rep.to_string() << '\n';
      return kInvalidInput;
    }
  }
  try {
    out.lifted = lift(out.file.system);
  } catch (const UnsupportedFunction& e) {
    io.err << "error: " << e.what() << '\n';
    return kNotLiftable;
  } catch (const ClosureDiverged& e) {
    io.err << "error: " << e.what() << '\n';
    return kNotLiftable;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  return kOk;
}

bool write_file(const Console& io, const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f || !(f << content)) {
    io.err << "error: cannot write " << p.string() << '\n';
    return false;
  }
  return true;
}

std::vector<double> parse_point(const std::string& s, size_t n) {
  std::vector<double> v;
  for (const auto& item : split_top_level(s)) v.push_back(parse_number(item));
  if (v.size() != n) throw SpecError("point '" + s + "' needs " + std::to_string(n) + " components");
  return v;
}

InputSignal parse_input(const std::string& spec, size_t channels) {
  if (spec == "zero") return InputSignal::zero(channels);
  if (spec.rfind("sin:", 0) == 0) {
    const auto parts = split_top_level(spec.substr(4), ':');
    if (parts.size() != 2) throw SpecError("expected sin:<amp>:<omega>");
    const double a = parse_number(parts[0]), w = parse_number(parts[1]);
    return InputSignal::sinusoid(std::vector<double>(channels, a), std::vector<double>(channels, w));
  }
  if (spec.rfind("table:", 0) == 0) {
    const std::string path = spec.substr(6);
    std::ifstream f(path);
    if (!f) throw SpecError("cannot open input table " + path);
    std::vector<double> times;
    std::vector<std::vector<double>> values;
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#') continue;
      for (char& c : line) {
        if (c == ',') c = ' ';
      }
      std::istringstream ls(line);
      double t;
      if (!(ls >> t)) continue;
      std::vector<double> row;
      for (double v; ls >> v;) row.push_back(v);
      if (row.size() != channels) {
        throw SpecError("input table row at t = " + std::to_string(t) + " needs " + std::to_string(channels) + " values");
      }
      times.push_back(t);
      values.push_back(std::move(row));
    }
    if (times.empty()) throw SpecError("input table " + path + " is empty");
    return InputSignal::table(std::move(times), std::move(values));
  }
  throw SpecError("unknown input '" + spec + "' (zero, sin:<amp>:<omega>, table:<path>)");
}

std::string csv_string(const Trajectory& t, const std::vector<std::string>& names) {
  std::ostringstream os;
  write_csv(os, t, names);
  return os.str();
}

fs::path with_suffix(const fs::path& p, const std::string& tag) {
  fs::path out = p;
  out.replace_extension();
  out += "." + tag + (p.has_extension() ? p.extension().string() : std::string(".csv"));
  return out;
}

}  // namespace

int cmd_lift(const Console& io, const std::string& spec_path, const std::string& out_path) {
  Loaded L;
  if (int rc = load(io, spec_path, L)) return rc;
  const fs::path out(out_path);
  const fs::path manifest = fs::path(out_path + ".manifest");
  if (!write_file(io, out, lifted_to_string(to_lifted_file(L.lifted, manifest.filename().string())))) {
    return kInvalidInput;
  }
  if (!write_file(io, manifest, manifest_to_string(L.lifted.immersion))) return kInvalidInput;
  io.out << "n = " << L.lifted.n << " -> N = " << L.lifted.dimension() << '\n';
  for (size_t k = L.lifted.n; k < L.lifted.dimension(); ++k) {
    io.out << L.lifted.vars[k] << " = " << L.lifted.immersion.coordinate_expr(k).to_string() << '\n';
  }
  return kOk;
}

int cmd_verify(const Console& io, const std::string& spec_path) {
  Loaded L;
  if (int rc = load(io, spec_path, L, false)) return rc;
  const auto& sys = L.file.system;
  const auto rep = validate(sys);
  io.out << verdict(io, rep.ok()) << " validate\n";
  if (!rep.ok()) {
    io.out << rep.to_string() << '\n';
    return kInvalidInput;
  }
  const auto st = check_structure(L.lifted);
  io.out << verdict(io, st.ok()) << " lifted structure (Jscript skew, Rscript symmetric, polynomial)\n";

  std::optional<std::string> first_failure;
  const auto diss = dissipation_identity(L.lifted, sys);
  io.out << verdict(io, diss.ok) << " dissipation identity\n";
  if (diss.ok) {
    if (diss.value.is_zero()) {
      io.out << "  conservative: dissipation ≡ 0\n";
    } else {
      io.out << "  dissipated power: " << to_expr(diss.value).to_string() << '\n';
    }
  } else {
    first_failure = diss.detail;
  }
  const auto outs = output_identity(L.lifted, sys);
  for (size_t i = 0; i < outs.size(); ++i) {
    io.out << verdict(io, outs[i].ok) << " output identity, port " << i + 1 << '\n';
    if (outs[i].ok) {
      io.out << "  y" << i + 1 << " = " << to_expr(outs[i].value).to_string() << '\n';
    } else if (!first_failure) {
      first_failure = outs[i].detail;
    }
  }
  const auto audit = numeric_identity_audit(L.lifted, sys);
  io.out << std::setprecision(3) << "numeric audit: " << audit.samples << " samples, dissipation error "
         << audit.max_dissipation_error << ", output error " << audit.max_output_error << '\n';
  if (!st.ok() && !first_failure) first_failure = "lifted structure check failed";
  if (first_failure) {
    io.err << *first_failure << '\n';
    return kInvalidInput;
  }
  return kOk;
}

int cmd_simulate(const Console& io, const std::string& spec_path, const SimulateFlags& flags) {
  Loaded L;
  if (int rc = load(io, spec_path, L)) return rc;
  const auto& sys = L.file.system;
  const auto& block = L.file.simulate;
  double t_end = 10.0, step = 1e-3;
  std::string input = "zero";
  std::vector<double> x0(sys.n(), 0.0);
  InputSignal u;
  try {
    if (const auto* v = block.find("t_end")) t_end = parse_number(*v);
    if (const auto* v = block.find("step")) step = parse_number(*v);
    if (const auto* v = block.find("input")) input = *v;
    if (const auto* v = block.find("x0")) x0 = parse_point(*v, sys.n());
    if (flags.t_end) t_end = *flags.t_end;
    if (flags.step) step = *flags.step;
    if (flags.input) input = *flags.input;
    if (!(step > 0.0) || !std::isfinite(step)) throw SpecError("--step must be positive");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw SpecError("--t-end must be positive");
    u = parse_input(input, sys.m());
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }

  const Model lifted = make_model(L.lifted);
  const auto xb0 = L.lifted.immersion.evaluate(x0);
  Trajectory tl, to;
  try {
    tl = integrate(lifted, xb0, u, 0.0, t_end, step);
    if (flags.both) to = integrate(make_model(sys), x0, u, 0.0, t_end, step);
  } catch (const NonFiniteState& e) {
    io.err << "error: integration failed: " << e.what() << '\n';
    return kLoopFailed;
  }

  io.out << std::setprecision(6);
  io.out << "steps " << tl.size() - 1 << " t_end " << tl.t.back() << '\n';
  const auto bal = energy_audit(tl, lifted.dissipation);
  io.out << "energy balance residual " << bal.residual << " passivity surplus " << bal.min_prefix_surplus << '\n';
  if (flags.both) {
    const auto c = consistency_report(to, tl, L.lifted.immersion);
    io.out << "manifold drift " << c.manifold_drift << "\noutput deviation " << c.output_deviation
           << "\nhamiltonian deviation " << c.hamiltonian_deviation << '\n';
  }
  if (flags.csv) {
    const fs::path p(*flags.csv);
    if (flags.both) {
      if (!write_file(io, with_suffix(p, "original"), csv_string(to, sys.states))) return kInvalidInput;
      if (!write_file(io, with_suffix(p, "lifted"), csv_string(tl, L.lifted.vars))) return kInvalidInput;
    } else if (!write_file(io, p, csv_string(tl, L.lifted.vars))) {
      return kInvalidInput;
    }
  }
  return kOk;
}

int cmd_design(const Console& io, const std::string& spec_path, const DesignFlags& flags) {
  Loaded L;
  if (int rc = load(io, spec_path, L)) return rc;
  const auto& sys = L.file.system;
  const auto& block = L.file.design;
  const auto& vars = L.lifted.vars;

  DesignSpec spec;
  HdTemplate tpl;
  ClosedLoopOptions loop;
  double tolerance = 1e-2;
  std::vector<std::vector<double>> base_ics;
  try {
    std::vector<double> base(sys.n(), 0.0);
    std::string setpoint = block.find("setpoint") ? *block.find("setpoint") : "";
    if (flags.setpoint) setpoint = *flags.setpoint;
    if (!setpoint.empty()) {
      for (const auto& item : split_top_level(setpoint)) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw SpecError("setpoint entries look like x2=4");
        std::string name = item.substr(0, eq);
        name.erase(name.find_last_not_of(' ') + 1);
        const auto it = std::find(sys.states.begin(), sys.states.end(), name);
        if (it == sys.states.end()) throw SpecError("setpoint names unknown state '" + name + "'");
        base[it - sys.states.begin()] = parse_number(item.substr(eq + 1));
      }
    }
    spec = make_design_spec(L.lifted, base);
    if (const auto* v = block.find("degree")) spec.omega_degree = static_cast<int>(parse_number(*v));
    if (const auto* v = block.find("ball")) spec.radius = parse_number(*v);
    if (const auto* v = block.find("r")) spec.r = parse_rational(*v);
    if (const auto* v = block.find("delta")) spec.delta = parse_number(*v);
    if (const auto* v = block.find("multiplier_degree")) spec.multiplier_degree = static_cast<int>(parse_number(*v));
    if (const auto* v = block.find("taylor_order")) spec.taylor_order = static_cast<int>(parse_number(*v));
    if (const auto* v = block.find("t_end")) loop.t_end = parse_number(*v);
    if (const auto* v = block.find("step")) loop.step = parse_number(*v);
    if (const auto* v = block.find("tolerance")) tolerance = parse_number(*v);
    if (flags.degree) spec.omega_degree = *flags.degree;
    if (flags.ball) spec.radius = *flags.ball;
    if (flags.r) spec.r = parse_rational(*flags.r);
    if (flags.delta) spec.delta = *flags.delta;
    if (spec.omega_degree < 1) throw SpecError("--degree must be at least 1");
    if (!(loop.step > 0.0) || !(loop.t_end > 0.0)) throw SpecError("closed-loop step and t_end must be positive");

    tpl = default_template(spec);
    for (const auto& f : block.all("fixed")) {
      const auto p = as_polynomial(parse(f, vars));
      if (!p) throw SpecError("fixed term '" + f + "' is not a polynomial");
      tpl.fixed_terms.push_back(p->with_variables(vars));
    }
    if (const auto* v = block.find("omega_vars")) {
      for (const auto& name : split_top_level(*v)) {
        if (std::find(vars.begin(), vars.end(), name) == vars.end()) {
          throw SpecError("omega_vars names unknown variable '" + name + "'");
        }
        tpl.omega_vars.push_back(name);
      }
    }
    for (const auto& ic : block.all("initial")) base_ics.push_back(parse_point(ic, sys.n()));
    if (base_ics.empty()) {
      for (size_t k = 0; k < sys.n(); ++k) {
        for (double s : {1.0, -1.0}) {
          auto p = base;
          p[k] += s;
          base_ics.push_back(p);
        }
      }
    }
    check_design_spec(spec);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }

  DesignResult res;
  try {
    res = design(spec, tpl);
  } catch (const InconsistentMatching& e) {
    io.err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const MaxIterations& e) {
    io.err << "infeasible: solver did not reach a verdict: " << e.what() << '\n';
    return kInfeasible;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }

  std::optional<ClosedLoopReport> report;
  if (res.feasible) {
    const Controller ctl(spec, res.hd_shifted);
    report = closed_loop_validate(spec, ctl, res.hd_shifted, manifold_initial_states(spec, base_ics), loop);
  }
  std::ostringstream text;
  write_design_report(text, spec, res, report ? &*report : nullptr);
  io.out << text.str();
  if (flags.csv_dir) {
    const fs::path dir(*flags.csv_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!write_file(io, dir / "design_report.txt", text.str())) return kInvalidInput;
    if (res.feasible) {
      std::ostringstream hd;
      write_hd_csv(hd, res);
      if (!write_file(io, dir / "hd.csv", hd.str())) return kInvalidInput;
      for (size_t k = 0; k < report->runs.size(); ++k) {
        const auto& run = report->runs[k];
        if (!run.failure.empty()) continue;
        const fs::path p = dir / ("closed_loop_" + std::to_string(k + 1) + ".csv");
        if (!write_file(io, p, csv_string(run.trajectory, vars))) return kInvalidInput;
      }
    }
  }
  if (!res.feasible) {
    io.err << "infeasible: " << res.solution.detail << '\n';
    return kInfeasible;
  }
  const bool ok = report->converged(tolerance) && report->monotone();
  io.out << verdict(io, ok) << " closed loop (" << report->runs.size() << " runs, tolerance " << tolerance << ")\n";
  return ok ? kOk : kLoopFailed;
}

}  // namespace phlift::cli
