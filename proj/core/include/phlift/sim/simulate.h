#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "phlift/ph/system.h"

namespace phlift {

/// Input u(t), optionally depending on the state (feedback).
class InputSignal {
 public:
  using Feedback = std::function<void(double t, std::span<const double> x, std::span<double> u)>;

  static InputSignal zero(size_t channels);
  /// u_i(t) = a_i sin(omega_i t).
  static InputSignal sinusoid(std::vector<double> amplitude, std::vector<double> omega);
  /// Piecewise constant, right-continuous: u(t) = values[k] for
  /// times[k] <= t < times[k+1]; values[0] before times[0].
  static InputSignal table(std::vector<double> times, std::vector<std::vector<double>> values);
  static InputSignal feedback(size_t channels, Feedback law);

  size_t channels() const { return channels_; }
  bool is_feedback() const { return kind_ == Kind::kFeedback; }
  void evaluate(double t, std::span<const double> x, std::span<double> u) const;

 private:
  enum class Kind { kZero, kSinusoid, kTable, kFeedback };
  Kind kind_ = Kind::kZero;
  size_t channels_ = 0;
  std::vector<double> amplitude_, omega_, times_;
  std::vector<std::vector<double>> values_;
  Feedback law_;
};

/// Numerical pH model: right-hand side, outputs, energy and dissipation.
struct Model {
  size_t dim = 0;
  size_t inputs = 0;
  std::vector<std::string> state_names;
  std::function<void(std::span<const double> x, std::span<const double> u, std::span<double> dx)> rhs;
  std::function<void(std::span<const double> x, std::span<double> y)> output;
  std::function<double(std::span<const double> x)> hamiltonian;
  std::function<double(std::span<const double> x)> dissipation;
};

/// Original system x' = (J - R) grad H + g u.
Model make_model(const PHSystem& sys);
/// Lifted polynomial system xbar' = (Jscript - Rscript) grad Hbar + lambda u.
Model make_model(const LiftedPHSystem& lifted);

struct Trajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> x, u, y;
  std::vector<double> H;

  size_t size() const { return t.size(); }
};

/// Classical fixed-step RK4 on [t0, tf] with step h; the input is evaluated at
/// the stage times (and stage states for feedback). Throws NonFiniteState at
/// the first non-finite stage.
Trajectory integrate(const Model& model, const std::vector<double>& x0,
                     const InputSignal& u, double t0, double tf, double h);

struct ConsistencyMetrics {
  double manifold_drift = 0.0;
  double output_deviation = 0.0;
  double hamiltonian_deviation = 0.0;
};

/// Compares a lifted run with Psi_bar applied to the original run. Throws
/// GridMismatch when the grids differ.
ConsistencyMetrics consistency_report(const Trajectory& orig, const Trajectory& lifted,
                                      const Immersion& imm);

struct BalanceResidual {
  /// |H(end) - H(start) - int (y^T u - d) dt|.
  double residual = 0.0;
  /// int u^T y dt - (H(end) - H(start)).
  double passivity_surplus = 0.0;
  /// Smallest passivity surplus over all grid prefixes [t0, t_k].
  double min_prefix_surplus = 0.0;
  double supplied = 0.0;
  double dissipated = 0.0;
};

/// Energy balance with trapezoidal quadrature on the trajectory grid.
BalanceResidual energy_audit(const Trajectory& traj,
                             const std::function<double(std::span<const double>)>& dissipation);

/// Header t,<states>,u1..um,y1..ym,H; one row per grid point; %.17g.
void write_csv(std::ostream& os, const Trajectory& traj,
               const std::vector<std::string>& state_names);

}  // namespace phlift
