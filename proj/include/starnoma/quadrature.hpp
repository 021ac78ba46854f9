#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace starnoma {

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1] (QUADPACK dqk15 constants).
inline constexpr std::array<double, 8> kKronrodX = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr std::array<double, 8> kKronrodW = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr std::array<double, 4> kGaussW = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class F>
void gk15(const F& f, double a, double b, double& value, double& error) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double f0 = f(c);
  double k = kKronrodW[7] * f0;
  double g = kGaussW[3] * f0;
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kKronrodX[i];
    const double fs = f(c - dx) + f(c + dx);
    k += kKronrodW[i] * fs;
    if (i % 2 == 1) g += kGaussW[i / 2] * fs;
  }
  value = k * h;
  // |K15 - G7| is a conservative bound for the Kronrod error on smooth
  // integrands; costs a bisection or two but never trusts a bad panel.
  error = std::max(std::abs((k - g) * h), 50.0 * 1e-16 * std::abs(value));
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration of f over [a, b] to a relative
// tolerance; bisects the interval with the largest error estimate.
template <class F>
double integrate_adaptive(const F& f, double a, double b, double rel_tol = 1e-4,
                          double abs_tol = 1e-14, int max_intervals = 512) {
  if (a == b) return 0.0;
  struct Piece {
    double a, b, value, error;
  };
  std::vector<Piece> pieces;
  {
    double v, e;
    detail::gk15(f, a, b, v, e);
    pieces.push_back({a, b, v, e});
  }
  for (;;) {
    double total = 0.0, err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      total += pieces[i].value;
      err += pieces[i].error;
      if (pieces[i].error > pieces[worst].error) worst = i;
    }
    if (err <= std::max(rel_tol * std::abs(total), abs_tol)) return total;
    if (static_cast<int>(pieces.size()) >= max_intervals) {
      throw QuadratureError("adaptive quadrature: no convergence; " +
                            std::to_string(pieces.size()) + " intervals, worst [" +
                            std::to_string(pieces[worst].a) + ", " +
                            std::to_string(pieces[worst].b) + "] error " +
                            std::to_string(pieces[worst].error));
    }
    const Piece p = pieces[worst];
    const double mid = 0.5 * (p.a + p.b);
    double v1, e1, v2, e2;
    detail::gk15(f, p.a, mid, v1, e1);
    detail::gk15(f, mid, p.b, v2, e2);
    pieces[worst] = {p.a, mid, v1, e1};
    pieces.push_back({mid, p.b, v2, e2});
  }
}

}  // namespace starnoma
