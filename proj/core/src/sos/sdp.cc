#include "phlift/sos/sdp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

#include "phlift/errors.h"

namespace phlift {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void SdpProblem::check() const {
  for (size_t i = 0; i < rows.size(); ++i) {
    for (const auto& e : rows[i].gram) {
      if (e.block >= block_sizes.size() || e.col >= block_sizes[e.block] || e.row > e.col) {
        throw std::invalid_argument("bad Gram entry in SDP row " + std::to_string(i));
      }
    }
    for (const auto& [j, v] : rows[i].free) {
      if (j >= num_free) throw std::invalid_argument("bad free index in SDP row " + std::to_string(i));
    }
  }
}

double sdp_residual(const SdpProblem& sdp, const std::vector<MatrixXd>& blocks,
                    const std::vector<double>& free) {
  double worst = 0.0;
  for (const auto& row : sdp.rows) {
    double v = -row.rhs;
    for (const auto& e : row.gram) v += e.value * blocks[e.block](e.row, e.col);
    for (const auto& [j, c] : row.free) v += c * free[j];
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

namespace {

// Symmetric coefficient: A[r][c] = A[c][r] = a.
struct SymEntry {
  uint32_t r, c;
  double a;
};

struct RowPart {
  size_t row;
  std::vector<SymEntry> half;  // r <= c
  std::vector<SymEntry> full;  // both triangles
};

struct Reduced {
  std::vector<size_t> sizes;
  std::vector<std::vector<RowPart>> parts;  // per block
  MatrixXd B;
  VectorXd b, f;
  /// Objective on the blocks; empty means zero.
  std::vector<MatrixXd> C;
  size_t m = 0;
};

using Blocks = std::vector<MatrixXd>;

VectorXd apply_A(const Reduced& P, const Blocks& X) {
  VectorXd out = VectorXd::Zero(P.m);
  for (size_t k = 0; k < P.sizes.size(); ++k) {
    for (const auto& part : P.parts[k]) {
      double v = 0.0;
      for (const auto& e : part.half) v += (e.r == e.c ? 1.0 : 2.0) * e.a * X[k](e.r, e.c);
      out[part.row] += v;
    }
  }
  return out;
}

Blocks apply_At(const Reduced& P, const VectorXd& y) {
  Blocks out;
  for (size_t k = 0; k < P.sizes.size(); ++k) {
    MatrixXd Y = MatrixXd::Zero(P.sizes[k], P.sizes[k]);
    for (const auto& part : P.parts[k]) {
      const double yi = y[part.row];
      if (yi == 0.0) continue;
      for (const auto& e : part.half) {
        Y(e.r, e.c) += yi * e.a;
        if (e.r != e.c) Y(e.c, e.r) += yi * e.a;
      }
    }
    out.push_back(std::move(Y));
  }
  return out;
}

// M_ij = tr(A_i X A_j W).
MatrixXd schur(const Reduced& P, const Blocks& X, const Blocks& W) {
  MatrixXd M = MatrixXd::Zero(P.m, P.m);
  for (size_t k = 0; k < P.sizes.size(); ++k) {
    const auto& parts = P.parts[k];
    const MatrixXd& x = X[k];
    const MatrixXd& w = W[k];
    for (size_t i = 0; i < parts.size(); ++i) {
      for (size_t j = i; j < parts.size(); ++j) {
        double v = 0.0;
        for (const auto& e : parts[i].full) {
          for (const auto& g : parts[j].full) v += e.a * g.a * x(e.c, g.r) * w(g.c, e.r);
        }
        M(parts[i].row, parts[j].row) += v;
        if (i != j) M(parts[j].row, parts[i].row) += v;
      }
    }
  }
  return M;
}

MatrixXd sym(const MatrixXd& a) { return 0.5 * (a + a.transpose()); }

double inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.size(); ++k) s += (a[k].array() * b[k].array()).sum();
  return s;
}

double frob(const Blocks& a) { return std::sqrt(inner(a, a)); }

// Largest alpha with X + alpha dX >= 0 (infinity when unbounded).
double max_step(const Blocks& X, const Blocks& dX) {
  double alpha = std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < X.size(); ++k) {
    Eigen::LLT<MatrixXd> llt(X[k]);
    if (llt.info() != Eigen::Success) return 0.0;
    const MatrixXd L = llt.matrixL();
    const MatrixXd Li = L.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(L.rows(), L.cols()));
    const MatrixXd S = sym(Li * dX[k] * Li.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(S, Eigen::EigenvaluesOnly).eigenvalues()[0];
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

double min_eig(const MatrixXd& a) {
  if (a.rows() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(sym(a), Eigen::EigenvaluesOnly).eigenvalues()[0];
}

double max_eig(const MatrixXd& a) {
  if (a.rows() == 0) return 0.0;
  const auto ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(sym(a), Eigen::EigenvaluesOnly).eigenvalues();
  return ev[ev.size() - 1];
}

// Solves [[M, B], [B^T, 0]] [dy; dw] = [h; rf] by block elimination.
class KktSolver {
 public:
  KktSolver(const MatrixXd& M, const MatrixXd& B) : M_(M), B_(B) {
    MatrixXd Mr = M;
    const double reg = 1e-14 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    Mr.diagonal().array() += reg;
    ldlt_.compute(Mr);
    MinvB_ = ldlt_.solve(B);
    if (B.cols() > 0) {
      MatrixXd S = B.transpose() * MinvB_;
      S.diagonal().array() += 1e-14 * std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
      sldlt_.compute(S);
    }
  }

  // Two rounds of iterative refinement on the full system.
  void solve(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& dw) const {
    eliminate(h, rf, dy, dw);
    for (int round = 0; round < 2; ++round) {
      const VectorXd r1 = h - M_ * dy - B_ * dw;
      const VectorXd r2 = rf - B_.transpose() * dy;
      VectorXd cy, cw;
      eliminate(r1, r2, cy, cw);
      dy += cy;
      dw += cw;
    }
  }

 private:
  void eliminate(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& dw) const {
    const VectorXd Minvh = ldlt_.solve(h);
    if (B_.cols() == 0) {
      dw = VectorXd::Zero(0);
      dy = Minvh;
      return;
    }
    dw = sldlt_.solve(B_.transpose() * Minvh - rf);
    dy = Minvh - MinvB_ * dw;
  }

  const MatrixXd& M_;
  const MatrixXd& B_;
  Eigen::LDLT<MatrixXd> ldlt_, sldlt_;
  MatrixXd MinvB_;
};

struct IpmResult {
  Blocks X;
  VectorXd w, y;
  size_t iterations = 0;
  bool infeasible = false;
  /// Optimization mode: a primal feasible iterate was kept.
  bool have_point = false;
  std::string detail;
};

// Feasibility mode maximizes the margin and stops at the first verdict.
// Optimization mode minimizes the objective and returns the last iterate
// with small primal residual instead of throwing.
IpmResult interior_point(const Reduced& P, const SdpOptions& opt, bool optimize = false) {
  const size_t nb = P.sizes.size();
  size_t ntot = 0;
  for (size_t s : P.sizes) ntot += s;

  // Starting point scaled to the data.
  Blocks X, Z;
  for (size_t k = 0; k < nb; ++k) {
    const double n = static_cast<double>(P.sizes[k]);
    double amax = 0.0, ratio = 0.0;
    for (const auto& part : P.parts[k]) {
      double nrm = 0.0;
      for (const auto& e : part.full) nrm += e.a * e.a;
      nrm = std::sqrt(nrm);
      amax = std::max(amax, nrm);
      ratio = std::max(ratio, (1.0 + std::abs(P.b[part.row])) / (1.0 + nrm));
    }
    const double xi = std::max({10.0, std::sqrt(n), n * ratio});
    const double eta = std::max({10.0, std::sqrt(n), amax});
    X.push_back(xi * MatrixXd::Identity(P.sizes[k], P.sizes[k]));
    Z.push_back(eta * MatrixXd::Identity(P.sizes[k], P.sizes[k]));
  }
  VectorXd y = VectorXd::Zero(P.m);
  VectorXd w = VectorXd::Zero(P.B.cols());
  const double bnorm = P.b.norm(), fnorm = P.f.norm();
  const size_t t_index = static_cast<size_t>(P.B.cols()) - 1;
  double cnorm = 0.0;
  for (const auto& c : P.C) cnorm += c.squaredNorm();
  cnorm = std::sqrt(cnorm);

  IpmResult res;
  auto give_up = [&](const std::string& msg) {
    if (!optimize) throw MaxIterations(msg);
    res.detail = msg;
  };
  for (size_t it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it;
    const VectorXd Rp = P.b - apply_A(P, X) - P.B * w;
    Blocks Aty = apply_At(P, y);
    Blocks Rd(nb);
    for (size_t k = 0; k < nb; ++k) Rd[k] = (P.C.empty() ? MatrixXd::Zero(P.sizes[k], P.sizes[k]) : P.C[k]) - Z[k] - Aty[k];
    const VectorXd rf = P.f - P.B.transpose() * y;
    const double mu = inner(X, Z) / static_cast<double>(ntot);
    const double pobj = P.f.dot(w) + (P.C.empty() ? 0.0 : inner(P.C, X)), dobj = P.b.dot(y);
    const double rel_p = Rp.norm() / (1.0 + bnorm);
    const double rel_d = (frob(Rd) + rf.norm()) / (1.0 + fnorm + cnorm);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double t = optimize ? 0.0 : w[t_index];

    if (!std::isfinite(rel_p) || !std::isfinite(rel_d)) {
      give_up("interior point iterates became non-finite");
      break;
    }
    if (optimize) {
      if (rel_p <= opt.tolerance) {
        res.X = X;
        res.w = w;
        res.y = y;
        res.have_point = true;
      }
      if (rel_p <= opt.tolerance && rel_d <= 1e-6 && gap <= 1e-6) {
        res.detail = "converged";
        return res;
      }
      if (it + 1 == opt.max_iterations) {
        give_up("iteration cap reached");
        break;
      }
    } else {
    if (rel_d <= opt.tolerance && dobj > 10.0 * opt.tolerance) {
      res.infeasible = true;
      res.detail = "dual bound proves max margin <= " + std::to_string(-dobj);
      break;
    }
    if (rel_p <= opt.tolerance && t > 0.0 &&
        (t >= 0.5 * (-dobj) || t >= 1.0 - opt.tolerance)) {
      res.detail = "strictly feasible point found";
      break;
    }
    if (rel_p <= opt.tolerance && rel_d <= opt.tolerance && gap <= opt.tolerance) {
      res.infeasible = t < -opt.tolerance;
      res.detail = "converged with margin " + std::to_string(t);
      break;
    }
    if (it + 1 == opt.max_iterations) {
      throw MaxIterations("SDP solver reached " + std::to_string(opt.max_iterations) +
                          " iterations (primal " + std::to_string(rel_p) + ", dual " +
                          std::to_string(rel_d) + ", gap " + std::to_string(gap) + ")");
    }
    }

    Blocks W(nb), XRdW(nb);
    for (size_t k = 0; k < nb; ++k) {
      W[k] = sym(Z[k].llt().solve(MatrixXd::Identity(P.sizes[k], P.sizes[k])));
      XRdW[k] = sym(X[k] * Rd[k] * W[k]);
    }
    const MatrixXd M = schur(P, X, W);
    const KktSolver kkt(M, P.B);
    const VectorXd AXRdW = apply_A(P, XRdW);

    auto direction = [&](const Blocks& Hhat, VectorXd& dy, VectorXd& dw, Blocks& dX, Blocks& dZ) {
      const VectorXd h = Rp - apply_A(P, Hhat) + AXRdW;
      kkt.solve(h, rf, dy, dw);
      const Blocks Atdy = apply_At(P, dy);
      dX.resize(nb);
      dZ.resize(nb);
      for (size_t k = 0; k < nb; ++k) {
        dZ[k] = Rd[k] - Atdy[k];
        dX[k] = Hhat[k] - sym(X[k] * dZ[k] * W[k]);
      }
    };

    // Predictor.
    Blocks H(nb);
    for (size_t k = 0; k < nb; ++k) H[k] = -X[k];
    VectorXd dy, dw;
    Blocks dX, dZ;
    direction(H, dy, dw, dX, dZ);
    double ap = std::min(1.0, max_step(X, dX));
    double ad = std::min(1.0, max_step(Z, dZ));
    Blocks Xa(nb), Za(nb);
    for (size_t k = 0; k < nb; ++k) {
      Xa[k] = X[k] + ap * dX[k];
      Za[k] = Z[k] + ad * dZ[k];
    }
    const double mu_aff = inner(Xa, Za) / static_cast<double>(ntot);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    // Corrector.
    for (size_t k = 0; k < nb; ++k) {
      H[k] = sigma * mu * W[k] - X[k] - sym(dX[k] * dZ[k] * W[k]);
    }
    direction(H, dy, dw, dX, dZ);
    const double gamma = 0.9 + 0.09 * std::min(ap, ad);
    ap = std::min(1.0, gamma * max_step(X, dX));
    ad = std::min(1.0, gamma * max_step(Z, dZ));
    if (ap < 1e-12 && ad < 1e-12) {
      give_up("interior point stalled at iteration " + std::to_string(it));
      break;
    }
    for (size_t k = 0; k < nb; ++k) {
      X[k] = sym(X[k] + ap * dX[k]);
      Z[k] = sym(Z[k] + ad * dZ[k]);
    }
    w += ap * dw;
    y += ad * dy;
  }
  if (optimize) return res;
  res.X = std::move(X);
  res.w = std::move(w);
  res.y = std::move(y);
  return res;
}

MatrixXd dense_free(const SdpProblem& sdp, const std::vector<size_t>& rows) {
  MatrixXd B = MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                              static_cast<Eigen::Index>(sdp.num_free));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, v] : sdp.rows[rows[i]].free) B(i, j) += v;
  }
  return B;
}

// Orthonormal basis of ker(G).
MatrixXd kernel(const MatrixXd& G, size_t cols) {
  if (G.rows() == 0) return MatrixXd::Identity(cols, cols);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(G.cols(), G.rows());
  qr.setThreshold(1e-10);
  qr.compute(G.transpose());
  const MatrixXd Q = qr.householderQ();
  const Eigen::Index r = qr.rank();
  return Q.rightCols(Q.cols() - r);
}

void fill_certificate(const SdpProblem& sdp, std::vector<double> y, SdpSolution& sol) {
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  if (scale > 0.0) {
    for (double& v : y) v /= scale;
  }
  SdpCertificate& c = sol.certificate;
  c.y = y;
  c.dual_value = 0.0;
  std::vector<MatrixXd> Y;
  for (size_t s : sdp.block_sizes) Y.push_back(MatrixXd::Zero(s, s));
  std::vector<double> bty(sdp.num_free, 0.0);
  for (size_t i = 0; i < sdp.rows.size(); ++i) {
    const auto& row = sdp.rows[i];
    c.dual_value += row.rhs * y[i];
    for (const auto& e : row.gram) {
      const double a = e.row == e.col ? e.value : 0.5 * e.value;
      Y[e.block](e.row, e.col) += y[i] * a;
      if (e.row != e.col) Y[e.block](e.col, e.row) += y[i] * a;
    }
    for (const auto& [j, v] : row.free) bty[j] += v * y[i];
  }
  c.cone_violation = -std::numeric_limits<double>::infinity();
  for (const auto& b : Y) {
    if (b.rows() > 0) c.cone_violation = std::max(c.cone_violation, max_eig(b));
  }
  if (Y.empty()) c.cone_violation = 0.0;
  c.free_residual = 0.0;
  for (double v : bty) c.free_residual = std::max(c.free_residual, std::abs(v));
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& sdp, const SdpOptions& options) {
  sdp.check();
  const size_t p = sdp.num_free;
  std::vector<size_t> gram_rows, free_rows;
  for (size_t i = 0; i < sdp.rows.size(); ++i) {
    (sdp.rows[i].gram.empty() ? free_rows : gram_rows).push_back(i);
  }

  SdpSolution sol;

  // Rows touching only free variables.
  const MatrixXd G = dense_free(sdp, free_rows);
  VectorXd g(static_cast<Eigen::Index>(free_rows.size()));
  for (size_t i = 0; i < free_rows.size(); ++i) g[i] = sdp.rows[free_rows[i]].rhs;
  VectorXd u0 = VectorXd::Zero(p);
  if (G.rows() > 0 && p > 0) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(G.rows(), G.cols());
    cod.setThreshold(1e-10);
    cod.compute(G);
    u0 = cod.solve(g);
  }
  const VectorXd gres = g - G * u0;
  if (G.rows() > 0 && gres.cwiseAbs().maxCoeff() > options.tolerance * (1.0 + g.cwiseAbs().maxCoeff())) {
    std::vector<double> y(sdp.rows.size(), 0.0);
    for (size_t i = 0; i < free_rows.size(); ++i) y[free_rows[i]] = gres[i];
    sol.status = SdpStatus::kInfeasible;
    sol.detail = "linear equalities on free variables are inconsistent";
    fill_certificate(sdp, std::move(y), sol);
    return sol;
  }
  const MatrixXd K = kernel(G, p);

  // Remaining rows in the reduced variables w (u = u0 + K' w).
  const MatrixXd Bg = dense_free(sdp, gram_rows);
  const MatrixXd BK = Bg * K;
  std::vector<Eigen::Index> keep;
  if (BK.cols() > 0 && BK.rows() > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(BK.rows(), BK.cols());
    qr.setThreshold(1e-10);
    qr.compute(BK);
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = 0; j < qr.rank(); ++j) keep.push_back(perm[j]);
    std::sort(keep.begin(), keep.end());
  }
  MatrixXd Kk(K.rows(), static_cast<Eigen::Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) Kk.col(j) = K.col(keep[j]);

  Reduced R;
  R.sizes = sdp.block_sizes;
  R.sizes.push_back(1);  // slack of t <= 1
  R.parts.resize(R.sizes.size());
  R.m = gram_rows.size() + 1;
  const Eigen::Index pk = static_cast<Eigen::Index>(keep.size());
  R.B = MatrixXd::Zero(R.m, pk + 1);
  R.B.topLeftCorner(gram_rows.size(), pk) = Bg * Kk;
  R.b = VectorXd::Zero(R.m);
  R.b.head(gram_rows.size()) = [&] {
    VectorXd v(static_cast<Eigen::Index>(gram_rows.size()));
    for (size_t i = 0; i < gram_rows.size(); ++i) v[i] = sdp.rows[gram_rows[i]].rhs;
    return VectorXd(v - Bg * u0);
  }();
  for (size_t i = 0; i < gram_rows.size(); ++i) {
    std::vector<std::vector<SymEntry>> per_block(sdp.block_sizes.size());
    double trace = 0.0;
    for (const auto& e : sdp.rows[gram_rows[i]].gram) {
      const double a = e.row == e.col ? e.value : 0.5 * e.value;
      per_block[e.block].push_back({e.row, e.col, a});
      if (e.row == e.col) trace += e.value;
    }
    R.B(i, pk) = trace;
    for (size_t k = 0; k < per_block.size(); ++k) {
      if (per_block[k].empty()) continue;
      RowPart part{i, {}, {}};
      // Merge duplicates.
      std::sort(per_block[k].begin(), per_block[k].end(), [](const SymEntry& a, const SymEntry& b) {
        return std::tie(a.r, a.c) < std::tie(b.r, b.c);
      });
      for (const auto& e : per_block[k]) {
        if (!part.half.empty() && part.half.back().r == e.r && part.half.back().c == e.c) {
          part.half.back().a += e.a;
        } else {
          part.half.push_back(e);
        }
      }
      for (const auto& e : part.half) {
        part.full.push_back(e);
        if (e.r != e.c) part.full.push_back({e.c, e.r, e.a});
      }
      R.parts[k].push_back(std::move(part));
    }
  }
  const size_t bound_row = gram_rows.size();
  R.parts.back().push_back(RowPart{bound_row, {{0, 0, 1.0}}, {{0, 0, 1.0}}});
  R.B(bound_row, pk) = 1.0;
  R.b[bound_row] = 1.0;
  R.f = VectorXd::Zero(pk + 1);
  R.f[pk] = -1.0;

  const IpmResult ipm = interior_point(R, options);
  sol.iterations = ipm.iterations;
  sol.detail = ipm.detail;
  const double t = ipm.w[pk];
  sol.margin = t;

  if (ipm.infeasible) {
    // Lift the reduced ray back to every row.
    std::vector<double> y(sdp.rows.size(), 0.0);
    VectorXd yr = ipm.y.head(gram_rows.size());
    for (size_t i = 0; i < gram_rows.size(); ++i) y[gram_rows[i]] = yr[i];
    if (G.rows() > 0) {
      const VectorXd v = Bg.transpose() * yr;
      Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(G.cols(), G.rows());
      cod.setThreshold(1e-10);
      cod.compute(G.transpose());
      const VectorXd yg = cod.solve(VectorXd(-v));
      for (size_t i = 0; i < free_rows.size(); ++i) y[free_rows[i]] = yg[i];
    }
    sol.status = SdpStatus::kInfeasible;
    fill_certificate(sdp, std::move(y), sol);
    return sol;
  }

  sol.status = SdpStatus::kFeasible;
  VectorXd u = u0 + Kk * ipm.w.head(pk);
  for (size_t k = 0; k < sdp.block_sizes.size(); ++k) {
    sol.blocks.push_back(ipm.X[k] + t * MatrixXd::Identity(sdp.block_sizes[k], sdp.block_sizes[k]));
  }

  if (!sdp.trace_weights.empty() && t > 0.0) {
    if (sdp.trace_weights.size() != sdp.block_sizes.size()) {
      throw std::invalid_argument("trace_weights needs one weight per block");
    }
    // X = X'' + eta I with X'' >= 0; same reduced free variables, no margin.
    const double eta = 0.5 * t;
    Reduced R2;
    R2.sizes = sdp.block_sizes;
    R2.parts.assign(R.parts.begin(), R.parts.end() - 1);
    R2.m = gram_rows.size();
    R2.B = R.B.topLeftCorner(R2.m, pk);
    R2.b = R.b.head(R2.m) - eta * R.B.col(pk).head(R2.m);
    R2.f = VectorXd::Zero(pk);
    for (size_t k = 0; k < sdp.block_sizes.size(); ++k) {
      R2.C.push_back(sdp.trace_weights[k] * MatrixXd::Identity(sdp.block_sizes[k], sdp.block_sizes[k]));
    }
    const IpmResult opt2 = interior_point(R2, options, true);
    sol.refine_iterations = opt2.iterations;
    if (opt2.have_point) {
      u = u0 + Kk * opt2.w;
      for (size_t k = 0; k < sdp.block_sizes.size(); ++k) {
        sol.blocks[k] = opt2.X[k] + eta * MatrixXd::Identity(sdp.block_sizes[k], sdp.block_sizes[k]);
      }
      sol.detail += "; trace solve " + opt2.detail;
    }
    for (size_t k = 0; k < sdp.block_sizes.size(); ++k) {
      sol.weighted_trace += sdp.trace_weights[k] * sol.blocks[k].trace();
    }
  }
  sol.free.assign(u.data(), u.data() + u.size());

  // Least-norm correction of X onto the equality set for fixed u.
  {
    VectorXd r(static_cast<Eigen::Index>(gram_rows.size()));
    for (size_t i = 0; i < gram_rows.size(); ++i) {
      const auto& row = sdp.rows[gram_rows[i]];
      double v = row.rhs;
      for (const auto& e : row.gram) v -= e.value * sol.blocks[e.block](e.row, e.col);
      for (const auto& [j, c] : row.free) v -= c * sol.free[j];
      r[i] = v;
    }
    // Rows as vectors over unordered entries with weights value; AA^T in that metric.
    std::map<std::tuple<uint32_t, uint32_t, uint32_t>, std::vector<std::pair<size_t, double>>> by_entry;
    for (size_t i = 0; i < gram_rows.size(); ++i) {
      for (const auto& e : sdp.rows[gram_rows[i]].gram) by_entry[{e.block, e.row, e.col}].emplace_back(i, e.value);
    }
    MatrixXd AAt = MatrixXd::Zero(r.size(), r.size());
    for (const auto& [key, list] : by_entry) {
      for (const auto& [i, a] : list) {
        for (const auto& [j, b] : list) AAt(i, j) += a * b;
      }
    }
    const VectorXd lam = AAt.ldlt().solve(r);
    for (const auto& [key, list] : by_entry) {
      const auto& [blk, rr, cc] = key;
      double d = 0.0;
      for (const auto& [i, a] : list) d += a * lam[i];
      sol.blocks[blk](rr, cc) += d;
      if (rr != cc) sol.blocks[blk](cc, rr) += d;
    }
  }

  sol.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& b : sol.blocks) {
    if (b.rows() > 0) sol.min_eigenvalue = std::min(sol.min_eigenvalue, min_eig(b));
  }
  if (sol.blocks.empty()) sol.min_eigenvalue = 0.0;
  sol.residual = sdp_residual(sdp, sol.blocks, sol.free);
  return sol;
}

}  // namespace phlift
