#pragma once

#include <limits>

#include "starnoma/linearization.hpp"

namespace starnoma {

struct SolverOptions {
  double tol = 1e-8;       // max Frobenius change across the block family
  int max_iters = 5000;
  double damping = 0.5;    // initial mixing weight, halved on residual growth
  double eps_im = 1e-6;    // imaginary offset used when evaluating on the real axis
  bool record_history = false;
};

struct SolveResult {
  cxd z{};
  Mat G;     // converged E_D-structured family
  Mat M;     // Lambda(z) - R(G) - Lbar at convergence
  Mat Minv;  // full operator-valued Cauchy transform
  int iters = 0;
  double residual = 0.0;
  std::vector<double> history;
};

namespace detail {

inline double max_slot_change(const Mat& a, const Mat& b, const std::vector<Slot>& slots) {
  double worst = 0.0;
  for (const Slot& s : slots)
    worst = std::max(worst, (a.block(s.row, s.col, s.rows, s.cols) -
                             b.block(s.row, s.col, s.rows, s.cols))
                                .norm());
  return worst;
}

inline std::string locate_group(const Prop1Linearization& lin, int row) {
  static const char* names[] = {"G1", "G2", "G3", "G4", "G5", "G6", "G7"};
  for (int gidx = 6; gidx >= 0; --gidx)
    if (row >= lin.group_offset(static_cast<Prop1Linearization::Group>(gidx))) return names[gidx];
  return "G1";
}

inline std::string locate_group(const Prop2Linearization& lin, int row) {
  static const char* names[] = {"H1", "H2", "H3", "H4"};
  for (int gidx = 3; gidx >= 0; --gidx)
    if (row >= lin.group_offset(static_cast<Prop2Linearization::Group>(gidx))) return names[gidx];
  return "H1";
}

}  // namespace detail

// Damped simultaneous substitution on the subordination fixed point
// G = E_D[(Lambda(z) - R(G) - Lbar)^{-1}].
template <class Lin>
SolveResult solve_fixed_point(const Lin& lin, cxd z, const SolverOptions& opts = {},
                              const Mat* warm_start = nullptr) {
  const int n = lin.n();
  Mat g;
  if (warm_start && warm_start->rows() == n) {
    g = lin.project_ED(*warm_start);
  } else if (std::abs(z) > 1e-9) {
    g = lin.project_ED((1.0 / z) * Mat::Identity(n, n));
  } else {
    // z ~ 0 (power-factor limit): start from the deterministic resolvent.
    Eigen::PartialPivLU<Mat> lu(lin.assemble_M(z, Mat::Zero(n, n)));
    g = lin.project_ED(lu.inverse());
    if (!g.allFinite())
      throw SingularityError("fixed point init: deterministic part singular at z ~ 0");
  }

  double alpha = opts.damping;
  double prev_resid = std::numeric_limits<double>::infinity();
  std::vector<double> history;
  Mat m, minv, gnew;

  for (int it = 1; it <= opts.max_iters; ++it) {
    m = lin.assemble_M(z, g);
    Eigen::PartialPivLU<Mat> lu(m);
    minv = lu.inverse();
    if (!minv.allFinite()) {
      // Name the block group holding the worst pivot.
      const Mat& qr = lu.matrixLU();
      int bad = 0;
      double worst = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i)
        if (std::abs(qr(i, i)) < worst) {
          worst = std::abs(qr(i, i));
          bad = i;
        }
      throw SingularityError("fixed point: singular intermediate inverse in block " +
                             detail::locate_group(lin, bad));
    }
    gnew = lin.project_ED(minv);
    const double resid = detail::max_slot_change(gnew, g, lin.slots());
    if (opts.record_history) history.push_back(resid);

    if (resid <= opts.tol) {
      SolveResult out;
      out.z = z;
      out.G = gnew;
      out.M = std::move(m);
      out.Minv = std::move(minv);
      out.iters = it;
      out.residual = resid;
      out.history = std::move(history);
      return out;
    }
    if (resid > prev_resid * 1.0000001)
      alpha = std::max(alpha * 0.5, 0.01);
    else
      alpha = std::min(alpha * 1.1, 1.0);
    prev_resid = resid;
    g += alpha * (gnew - g);
  }
  throw IterativeFailure("fixed point: no convergence within max_iters (residual " +
                             std::to_string(prev_resid) + ")",
                         std::move(history));
}

// Residual of re-substituting a solution into the fixed-point map once more;
// convergence-path independent self-consistency measure.
template <class Lin>
double self_consistency_residual(const Lin& lin, const SolveResult& sol) {
  Eigen::PartialPivLU<Mat> lu(lin.assemble_M(sol.z, sol.G));
  const Mat gnew = lin.project_ED(lu.inverse());
  return detail::max_slot_change(gnew, sol.G, lin.slots());
}

// Converged Prop.-1 family: the nine resolvent blocks plus the R-transform
// images entering the fixed point.
struct FixedPointSolution {
  cxd z{};
  Mat G1, G2, G3, G4, G5, G6, G7, G8, G9;
  Mat Phi1, Phi2, PhiTilde1, PhiTilde2;  // R-images at groups 1,5,7,4
  Mat PsiTilde11, PsiTilde22, PsiTilde12, PsiTilde21;
  Mat Upsilon;   // R-image at group 3
  Mat PsiTilde;  // zI - Phi1
  int iters = 0;
  double residual = 0.0;
  SolveResult raw;
};

inline FixedPointSolution make_solution(const Prop1Linearization& lin, SolveResult res) {
  using G = Prop1Linearization::Group;
  FixedPointSolution s;
  s.z = res.z;
  s.G1 = lin.g_block(res.G, G::G1, G::G1);
  s.G2 = lin.g_block(res.G, G::G2, G::G2);
  s.G3 = lin.g_block(res.G, G::G3, G::G3);
  s.G4 = lin.g_block(res.G, G::G4, G::G4);
  s.G5 = lin.g_block(res.G, G::G5, G::G5);
  s.G6 = lin.g_block(res.G, G::G6, G::G6);
  s.G7 = lin.g_block(res.G, G::G7, G::G7);
  s.G8 = lin.g_block(res.G, G::G2, G::G6);
  s.G9 = lin.g_block(res.G, G::G6, G::G2);
  const Mat r = lin.apply_R(res.G);
  s.Phi1 = lin.g_block(r, G::G1, G::G1);
  s.Phi2 = lin.g_block(r, G::G5, G::G5);
  s.PhiTilde1 = lin.g_block(r, G::G7, G::G7);
  s.PhiTilde2 = lin.g_block(r, G::G4, G::G4);
  s.PsiTilde11 = lin.g_block(r, G::G2, G::G2);
  s.PsiTilde22 = lin.g_block(r, G::G6, G::G6);
  s.PsiTilde12 = lin.g_block(r, G::G2, G::G6);
  s.PsiTilde21 = lin.g_block(r, G::G6, G::G2);
  s.Upsilon = lin.g_block(r, G::G3, G::G3);
  s.PsiTilde = -s.Phi1;
  s.PsiTilde.diagonal().array() += res.z;
  s.iters = res.iters;
  s.residual = res.residual;
  s.raw = std::move(res);
  return s;
}

// Prop.-1 entry point. Requires Im z > 0, or real z where the map stays
// regular (outside the spectral support).
inline FixedPointSolution solve_prop1(const ChannelStats& st, const ThetaState& theta, cxd z,
                                      const SolverOptions& opts = {},
                                      const Mat* warm_start = nullptr) {
  Prop1Linearization lin(st, theta);
  return make_solution(lin, solve_fixed_point(lin, z, opts, warm_start));
}

inline cxd cauchy_B(const FixedPointSolution& sol) {
  return sol.G1.trace() / static_cast<double>(sol.G1.rows());
}

// G_mu from G_B: in the coupled-only regime B carries R1-S zero eigenvalues
// that the mu measure excludes; after augmentation there is no point mass.
inline cxd cauchy_mu(cxd g_b, cxd z, int R1, int S, Regime regime) {
  if (regime == Regime::CoupledOnly) {
    if (std::abs(z) == 0.0) throw ContractViolation("cauchy_mu: pole at z = 0");
    return (static_cast<double>(R1) / S) * g_b -
           (static_cast<double>(R1 - S) / S) / z;
  }
  return (static_cast<double>(R1) / S) * g_b;
}

}  // namespace starnoma
