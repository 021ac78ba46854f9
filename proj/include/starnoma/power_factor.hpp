#pragma once

#include "starnoma/fixed_point.hpp"

namespace starnoma {

struct PowerSolution {
  double t = 0.0;
  Mat G1h, G2h, G3h, G4h;  // groups H1..H4 of the converged family
  int iters = 0;
  double residual = 0.0;
  SolveResult raw;
};

// Asymptotic power normalization factor t = -Tr(G_hat_1) at z -> 0: the Gram
// B_t = H1^H H1 + H2^H H2 keeps its spectrum away from zero, so the limit is
// solved directly at z = 0 with a continuation fallback from z = -1.
inline PowerSolution solve_prop2(const ChannelStats& st, const ThetaState& theta,
                                 const SolverOptions& opts = {},
                                 const Mat* warm_start = nullptr) {
  Prop2Linearization lin(st, theta);
  SolveResult res;
  try {
    res = solve_fixed_point(lin, cxd(0.0, 0.0), opts, warm_start);
  } catch (const std::exception&) {
    Mat warm;
    const Mat* prev = nullptr;
    for (double x : {-1.0, -0.1, -0.01, -1e-3, -1e-4, -1e-6, 0.0}) {
      res = solve_fixed_point(lin, cxd(x, 0.0), opts, prev);
      warm = res.G;
      prev = &warm;
    }
  }
  using G = Prop2Linearization::Group;
  PowerSolution out;
  out.G1h = lin.g_block(res.G, G::H1, G::H1);
  out.G2h = lin.g_block(res.G, G::H2, G::H2);
  out.G3h = lin.g_block(res.G, G::H3, G::H3);
  out.G4h = lin.g_block(res.G, G::H4, G::H4);
  out.t = -out.G1h.trace().real();
  out.iters = res.iters;
  out.residual = res.residual;
  out.raw = std::move(res);
  if (!(out.t > 0.0))
    throw IterativeFailure("solve_prop2: nonpositive power factor " + std::to_string(out.t));
  return out;
}

}  // namespace starnoma
