#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace phlift {

/// One coefficient of a Gram-block linear form: contributes value * X[row][col]
/// (row <= col, each unordered entry counted once).
struct SdpEntry {
  uint32_t block = 0;
  uint32_t row = 0;
  uint32_t col = 0;
  double value = 0.0;
};

/// Feasibility problem over block-diagonal X >= 0 and free u:
///   sum_entries value * X_b[row][col] + sum_j B_ij u_j = rhs_i  for every row.
struct SdpProblem {
  struct Row {
    std::vector<SdpEntry> gram;
    std::vector<std::pair<size_t, double>> free;
    double rhs = 0.0;
  };

  std::vector<size_t> block_sizes;
  size_t num_free = 0;
  std::vector<Row> rows;
  /// Optional per-block weights. When set and the problem is feasible, a
  /// second solve minimizes sum_b w_b tr(X_b) subject to X >= (margin / 2) I.
  std::vector<double> trace_weights;

  size_t num_rows() const { return rows.size(); }
  /// Throws std::invalid_argument on out-of-range or lower-triangle entries.
  void check() const;
};

struct SdpOptions {
  double tolerance = 1e-8;
  size_t max_iterations = 200;
};

enum class SdpStatus { kFeasible, kInfeasible };

/// Farkas ray y: sum_i y_i A_i <= 0, B^T y = 0, b^T y > 0, scaled to max |y_i| = 1.
struct SdpCertificate {
  std::vector<double> y;
  double dual_value = 0.0;
  /// Largest eigenvalue of sum_i y_i A_i (should be <= 0).
  double cone_violation = 0.0;
  /// max |B^T y|.
  double free_residual = 0.0;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::kInfeasible;
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<double> free;
  /// Optimal value of max t s.t. X - t I >= 0, t <= 1.
  double margin = 0.0;
  /// Weighted trace after the second solve (0 when not requested).
  double weighted_trace = 0.0;
  /// Iterations of the trace solve.
  size_t refine_iterations = 0;
  double min_eigenvalue = 0.0;
  /// max_i |A_i(X) + B_i u - rhs_i|.
  double residual = 0.0;
  size_t iterations = 0;
  SdpCertificate certificate;
  std::string detail;

  bool feasible() const { return status == SdpStatus::kFeasible; }
};

/// Primal-dual interior point (HKM direction, Mehrotra predictor-corrector)
/// on the phase-1 problem max t s.t. A(X') + t A(I) + B u = b, X' >= 0,
/// t + s = 1, s >= 0, with X = X' + t I. Rows without Gram entries are solved
/// first and the free variables restricted to their solution set. Throws
/// MaxIterations when neither verdict is reached. The optional trace solve
/// keeps its last primal feasible iterate if it stops early.
SdpSolution solve_sdp(const SdpProblem& sdp, const SdpOptions& options = {});

/// max_i |A_i(X) + B_i u - rhs_i| for an arbitrary candidate.
double sdp_residual(const SdpProblem& sdp, const std::vector<Eigen::MatrixXd>& blocks,
                    const std::vector<double>& free);

}  // namespace phlift
