#include "phlift/sim/simulate.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "phlift/errors.h"
#include "phlift/expr/compiled_poly.h"

namespace phlift {

InputSignal InputSignal::zero(size_t channels) {
  InputSignal s;
  s.kind_ = Kind::kZero;
  s.channels_ = channels;
  return s;
}

InputSignal InputSignal::sinusoid(std::vector<double> amplitude, std::vector<double> omega) {
  if (amplitude.size() != omega.size()) {
    throw std::invalid_argument("sinusoid amplitude and frequency lists differ in length");
  }
  InputSignal s;
  s.kind_ = Kind::kSinusoid;
  s.channels_ = amplitude.size();
  s.amplitude_ = std::move(amplitude);
  s.omega_ = std::move(omega);
  return s;
}

InputSignal InputSignal::table(std::vector<double> times,
                               std::vector<std::vector<double>> values) {
  if (times.empty() || times.size() != values.size()) {
    throw std::invalid_argument("input table needs one row per time");
  }
  if (!std::is_sorted(times.begin(), times.end())) {
    throw std::invalid_argument("input table times must be increasing");
  }
  InputSignal s;
  s.kind_ = Kind::kTable;
  s.channels_ = values.front().size();
  for (const auto& row : values) {
    if (row.size() != s.channels_) throw std::invalid_argument("ragged input table");
  }
  s.times_ = std::move(times);
  s.values_ = std::move(values);
  return s;
}

InputSignal InputSignal::feedback(size_t channels, Feedback law) {
  InputSignal s;
  s.kind_ = Kind::kFeedback;
  s.channels_ = channels;
  s.law_ = std::move(law);
  return s;
}

void InputSignal::evaluate(double t, std::span<const double> x, std::span<double> u) const {
  switch (kind_) {
    case Kind::kZero:
      std::fill(u.begin(), u.end(), 0.0);
      return;
    case Kind::kSinusoid:
      for (size_t i = 0; i < channels_; ++i) u[i] = amplitude_[i] * std::sin(omega_[i] * t);
      return;
    case Kind::kTable: {
      const auto it = std::upper_bound(times_.begin(), times_.end(), t);
      const size_t k = it == times_.begin() ? 0 : static_cast<size_t>(it - times_.begin()) - 1;
      std::copy(values_[k].begin(), values_[k].end(), u.begin());
      return;
    }
    case Kind::kFeedback:
      law_(t, x, u);
      return;
  }
}

// Models ----------------------------------------------------------------------

Model make_model(const PHSystem& sys) {
  struct Compiled {
    std::vector<CompiledExpr> f, dh;
    std::vector<std::vector<CompiledExpr>> g, R;
    CompiledExpr h;
  };
  auto c = std::make_shared<Compiled>();
  const size_t n = sys.n();
  const auto grad = sys.gradient();
  for (size_t k = 0; k < n; ++k) {
    std::vector<Expr> terms;
    for (size_t j = 0; j < n; ++j) terms.push_back((sys.J[k][j] - sys.R[k][j]) * grad[j]);
    c->f.emplace_back(Expr::sum(std::move(terms)), sys.states);
    c->dh.emplace_back(grad[k], sys.states);
  }
  for (const auto& col : sys.g) {
    c->g.emplace_back();
    for (const auto& e : col) c->g.back().emplace_back(e, sys.states);
  }
  for (const auto& row : sys.R) {
    c->R.emplace_back();
    for (const auto& e : row) c->R.back().emplace_back(e, sys.states);
  }
  c->h = CompiledExpr(sys.hamiltonian, sys.states);

  Model m;
  m.dim = n;
  m.inputs = sys.m();
  m.state_names = sys.states;
  m.rhs = [c, n](std::span<const double> x, std::span<const double> u, std::span<double> dx) {
    for (size_t k = 0; k < n; ++k) {
      double v = c->f[k](x);
      for (size_t i = 0; i < u.size(); ++i) {
        if (u[i] != 0.0) v += c->g[i][k](x) * u[i];
      }
      dx[k] = v;
    }
  };
  m.output = [c, n](std::span<const double> x, std::span<double> y) {
    std::vector<double> gx(n);
    for (size_t j = 0; j < n; ++j) gx[j] = c->dh[j](x);
    for (size_t i = 0; i < c->g.size(); ++i) {
      double v = 0.0;
      for (size_t j = 0; j < n; ++j) v += c->g[i][j](x) * gx[j];
      y[i] = v;
    }
  };
  m.hamiltonian = [c](std::span<const double> x) { return c->h(x); };
  m.dissipation = [c, n](std::span<const double> x) {
    std::vector<double> gx(n);
    for (size_t j = 0; j < n; ++j) gx[j] = c->dh[j](x);
    double d = 0.0;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) d += gx[i] * c->R[i][j](x) * gx[j];
    }
    return d;
  };
  return m;
}

Model make_model(const LiftedPHSystem& lifted) {
  struct Compiled {
    std::vector<CompiledPoly> f, grad;
    std::vector<std::vector<CompiledPoly>> ports;
    CompiledPoly diss, h_num, h_den;
  };
  auto c = std::make_shared<Compiled>();
  const size_t N = lifted.dimension();
  const auto& vars = lifted.vars;
  Poly diss = Poly::constant(Rational(0), vars);
  for (size_t k = 0; k < N; ++k) {
    Poly v = Poly::constant(Rational(0), vars);
    for (size_t j = 0; j < N; ++j) {
      if (lifted.gradient[j].is_zero()) continue;
      v += (lifted.Jscript[k][j] - lifted.Rscript[k][j]) * lifted.gradient[j];
      if (!lifted.gradient[k].is_zero()) {
        diss += lifted.gradient[k] * lifted.Rscript[k][j] * lifted.gradient[j];
      }
    }
    c->f.emplace_back(v, vars);
    c->grad.emplace_back(lifted.gradient[k], vars);
  }
  for (const auto& col : lifted.ports) {
    c->ports.emplace_back();
    for (const auto& p : col) c->ports.back().emplace_back(p, vars);
  }
  c->diss = CompiledPoly(diss, vars);
  c->h_num = CompiledPoly(lifted.hamiltonian.numerator(), vars);
  c->h_den = CompiledPoly(lifted.hamiltonian.denominator(), vars);

  Model m;
  m.dim = N;
  m.inputs = lifted.m();
  m.state_names = vars;
  m.rhs = [c, N](std::span<const double> x, std::span<const double> u, std::span<double> dx) {
    for (size_t k = 0; k < N; ++k) {
      double v = c->f[k](x);
      for (size_t i = 0; i < u.size(); ++i) {
        if (u[i] != 0.0 && !c->ports[i][k].is_zero()) v += c->ports[i][k](x) * u[i];
      }
      dx[k] = v;
    }
  };
  m.output = [c, N](std::span<const double> x, std::span<double> y) {
    std::vector<double> g(N);
    for (size_t j = 0; j < N; ++j) g[j] = c->grad[j](x);
    for (size_t i = 0; i < c->ports.size(); ++i) {
      double v = 0.0;
      for (size_t j = 0; j < N; ++j) {
        if (g[j] != 0.0) v += c->ports[i][j](x) * g[j];
      }
      y[i] = v;
    }
  };
  m.hamiltonian = [c](std::span<const double> x) { return c->h_num(x) / c->h_den(x); };
  m.dissipation = [c](std::span<const double> x) { return c->diss(x); };
  return m;
}

// Integration -----------------------------------------------------------------

namespace {
bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}
}  // namespace

Trajectory integrate(const Model& model, const std::vector<double>& x0,
                     const InputSignal& u, double t0, double tf, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (x0.size() != model.dim) throw std::invalid_argument("initial state has wrong dimension");
  if (u.channels() != model.inputs) {
    throw std::invalid_argument("input signal has " + std::to_string(u.channels()) +
                                " channels, model expects " + std::to_string(model.inputs));
  }
  const double span = tf - t0;
  if (span < 0.0) throw std::invalid_argument("empty time span");
  const auto steps = static_cast<size_t>(std::llround(span / h));
  const size_t n = model.dim, m = model.inputs;

  Trajectory tr;
  tr.t.reserve(steps + 1);
  tr.x.reserve(steps + 1);
  tr.u.reserve(steps + 1);
  tr.y.reserve(steps + 1);
  tr.H.reserve(steps + 1);

  std::vector<double> x = x0, k1(n), k2(n), k3(n), k4(n), tmp(n), us(m), y(m);
  auto stage = [&](double t, std::span<const double> xs, std::span<double> k) {
    u.evaluate(t, xs, us);
    if (!all_finite(us)) throw NonFiniteState(t);
    model.rhs(xs, us, k);
    if (!all_finite(k)) throw NonFiniteState(t);
  };
  auto record = [&](double t) {
    u.evaluate(t, x, us);
    model.output(x, y);
    const double H = model.hamiltonian(x);
    if (!all_finite(x) || !all_finite(y) || !std::isfinite(H)) throw NonFiniteState(t);
    tr.t.push_back(t);
    tr.x.push_back(x);
    tr.u.push_back(us);
    tr.y.push_back(y);
    tr.H.push_back(H);
  };

  if (!all_finite(x)) throw NonFiniteState(t0);
  record(t0);
  for (size_t s = 0; s < steps; ++s) {
    const double t = t0 + static_cast<double>(s) * h;
    stage(t, x, k1);
    for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    stage(t + 0.5 * h, tmp, k2);
    for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    stage(t + 0.5 * h, tmp, k3);
    for (size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    stage(t + h, tmp, k4);
    for (size_t i = 0; i < n; ++i) {
      x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    record(t0 + static_cast<double>(s + 1) * h);
  }
  return tr;
}

ConsistencyMetrics consistency_report(const Trajectory& orig, const Trajectory& lifted,
                                      const Immersion& imm) {
  if (orig.size() != lifted.size()) {
    throw GridMismatch("trajectories have " + std::to_string(orig.size()) + " and " +
                       std::to_string(lifted.size()) + " samples");
  }
  ConsistencyMetrics m;
  for (size_t k = 0; k < orig.size(); ++k) {
    if (std::abs(orig.t[k] - lifted.t[k]) > 1e-12 * (1.0 + std::abs(orig.t[k]))) {
      throw GridMismatch("time grids differ at sample " + std::to_string(k));
    }
    const auto psi = imm.evaluate(orig.x[k]);
    if (psi.size() != lifted.x[k].size()) {
      throw GridMismatch("lifted state dimension does not match the immersion");
    }
    for (size_t i = 0; i < psi.size(); ++i) {
      m.manifold_drift = std::max(m.manifold_drift, std::abs(lifted.x[k][i] - psi[i]));
    }
    for (size_t i = 0; i < orig.y[k].size(); ++i) {
      m.output_deviation = std::max(m.output_deviation, std::abs(lifted.y[k][i] - orig.y[k][i]));
    }
    m.hamiltonian_deviation =
        std::max(m.hamiltonian_deviation, std::abs(lifted.H[k] - orig.H[k]));
  }
  return m;
}

BalanceResidual energy_audit(const Trajectory& traj,
                             const std::function<double(std::span<const double>)>& dissipation) {
  BalanceResidual b;
  if (traj.size() < 2) return b;
  double prev_s = 0.0, prev_d = 0.0;
  for (size_t k = 0; k < traj.size(); ++k) {
    double s = 0.0;
    for (size_t i = 0; i < traj.u[k].size(); ++i) s += traj.u[k][i] * traj.y[k][i];
    const double d = dissipation(traj.x[k]);
    if (k > 0) {
      const double dt = traj.t[k] - traj.t[k - 1];
      b.supplied += 0.5 * dt * (s + prev_s);
      b.dissipated += 0.5 * dt * (d + prev_d);
      const double surplus = b.supplied - (traj.H[k] - traj.H.front());
      b.min_prefix_surplus = k == 1 ? surplus : std::min(b.min_prefix_surplus, surplus);
    }
    prev_s = s;
    prev_d = d;
  }
  const double dH = traj.H.back() - traj.H.front();
  b.residual = std::abs(dH - (b.supplied - b.dissipated));
  b.passivity_surplus = b.supplied - dH;
  return b;
}

void write_csv(std::ostream& os, const Trajectory& traj,
               const std::vector<std::string>& state_names) {
  os << "t";
  for (const auto& s : state_names) os << "," << s;
  const size_t m = traj.u.empty() ? 0 : traj.u.front().size();
  for (size_t i = 0; i < m; ++i) os << ",u" << i + 1;
  for (size_t i = 0; i < m; ++i) os << ",y" << i + 1;
  os << ",H\n";
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
  };
  for (size_t k = 0; k < traj.size(); ++k) {
    num(traj.t[k]);
    for (double v : traj.x[k]) {
      os << ",";
      num(v);
    }
    for (double v : traj.u[k]) {
      os << ",";
      num(v);
    }
    for (double v : traj.y[k]) {
      os << ",";
      num(v);
    }
    os << ",";
    num(traj.H[k]);
    os << "\n";
  }
}

}  // namespace phlift
