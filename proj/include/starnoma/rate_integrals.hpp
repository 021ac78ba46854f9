#pragma once

#include <map>

#include "starnoma/power_factor.hpp"
#include "starnoma/quadrature.hpp"
#include "starnoma/rates.hpp"

namespace starnoma {

// Information rates of the coupled subchannels from the Cauchy transform of
// the squared-GSV ratios (nats):
//   I1 = S * int_0^{a1} [ 1/(1+x) + (1+x)^{-2} G_mu(-(1+x)^{-1}) ] dx
//   I2 = S * int_0^{a2} [ -G_mu(-(1+x)) + kappa1 G_mu(-(1+kappa1 x)) ] dx
// g_mu evaluates Re G_mu at a real argument.
inline std::pair<double, double> integrate_rates(const SystemConfig& cfg, double t,
                                                 const std::function<double(double)>& g_mu,
                                                 double rel_tol = 1e-4) {
  const double S = cfg.S();
  const double a1 = cfg.a1(t);
  const double a2 = cfg.a2(t);
  const double i1 =
      a1 <= 0.0 ? 0.0
                : S * integrate_adaptive(
                          [&](double x) {
                            const double u = 1.0 + x;
                            return 1.0 / u + g_mu(-1.0 / u) / (u * u);
                          },
                          0.0, a1, rel_tol);
  const double i2 =
      a2 <= 0.0 ? 0.0
                : S * integrate_adaptive(
                          [&](double x) {
                            return -g_mu(-(1.0 + x)) +
                                   cfg.kappa1 * g_mu(-(1.0 + cfg.kappa1 * x));
                          },
                          0.0, a2, rel_tol);
  return {i1, i2};
}

// Caching G_mu evaluator backed by the Prop.-1 fixed point; each new spectral
// point warm-starts from the nearest solved neighbour.
class GmuEvaluator {
 public:
  GmuEvaluator(const ChannelStats& st, const ThetaState& theta, int R1, int S, Regime regime,
               SolverOptions opts = {})
      : lin_(st, theta), R1_(R1), S_(S), regime_(regime), opts_(opts) {}

  double operator()(double x) {
    const cxd gb = cauchy_B_at(x);
    return cauchy_mu(gb, cxd(x, opts_.eps_im), R1_, S_, regime_).real();
  }

  cxd cauchy_B_at(double x) {
    auto hit = cache_.find(x);
    if (hit == cache_.end()) {
      const Mat* warm = nullptr;
      if (!cache_.empty()) {
        auto up = cache_.lower_bound(x);
        if (up == cache_.end()) --up;
        else if (up != cache_.begin()) {
          auto down = std::prev(up);
          if (std::abs(down->first - x) < std::abs(up->first - x)) up = down;
        }
        warm = &up->second.G;
      }
      SolveResult res = solve_fixed_point(lin_, cxd(x, opts_.eps_im), opts_, warm);
      hit = cache_.emplace(x, std::move(res)).first;
    }
    const SolveResult& sol = hit->second;
    const int off = lin_.group_offset(Prop1Linearization::G1);
    return sol.G.block(off, off, R1_aug(), R1_aug()).trace() / static_cast<double>(R1_aug());
  }

  const Prop1Linearization& lin() const { return lin_; }
  std::size_t solves() const { return cache_.size(); }

 private:
  int R1_aug() const { return lin_.group_size(Prop1Linearization::G1); }

  Prop1Linearization lin_;
  int R1_, S_;
  Regime regime_;
  SolverOptions opts_;
  std::map<double, SolveResult> cache_;
};

struct AsymptoticOptions {
  SolverOptions solver;
  double delta = 1e-4;     // H2 augmentation for R2 < T < R1+R2
  double quad_rel_tol = 1e-4;
};

// Full Prop.-1 pipeline: augments the user-2 statistics when needed, obtains
// t from Prop. 2, integrates the coupled rates, and adds the exclusive
// subchannels. Requires R1 >= R2 (relabel users otherwise).
inline RateReport asymptotic_rates(const ChannelStats& st, const ThetaState& theta,
                                   const SystemConfig& cfg, const AsymptoticOptions& opts = {}) {
  cfg.validate();
  if (cfg.R1 < cfg.R2)
    throw ConfigError("asymptotic pipeline requires R1 >= R2; relabel the users");
  if (cfg.regime() == Regime::OrthogonalOnly)
    throw ConfigError("asymptotic pipeline: no coupled spectrum for T >= R1+R2");

  const double t = solve_prop2(st, theta, opts.solver).t;

  const bool augmented = cfg.regime() == Regime::Mixed;
  ChannelStats st_aug;
  const ChannelStats* stp = &st;
  if (augmented) {
    st_aug = st.augment_user2(opts.delta);
    stp = &st_aug;
  }

  GmuEvaluator gmu(*stp, theta, cfg.R1, cfg.S(), cfg.regime(), opts.solver);
  auto [i1, i2] = integrate_rates(cfg, t, std::ref(gmu), opts.quad_rel_tol);
  i1 += cfg.extra_subchannels(1) * std::log1p(cfg.b1(t));
  i2 += cfg.extra_subchannels(2) * std::log1p(cfg.b2(t));

  RateReport rep;
  rep.I1 = detail::to_unit(i1, cfg.unit);
  rep.I2 = detail::to_unit(i2, cfg.unit);
  rep.regime = cfg.regime();
  rep.S = cfg.S();
  rep.t = t;
  rep.unit = cfg.unit;
  return rep;
}

}  // namespace starnoma
