#pragma once

#include <set>

#include "starnoma/rate_integrals.hpp"

namespace starnoma {

namespace detail {

// log det via LU pivots: complex logs summed with the permutation parity.
// For the Hermitian M of this solver the value is real up to i*pi*k from
// negative pivots; those cancel in the phi differences entering the rates.
inline cxd logdet(const Eigen::PartialPivLU<Mat>& lu) {
  cxd acc(0.0, 0.0);
  const auto& m = lu.matrixLU();
  for (int i = 0; i < m.rows(); ++i) acc += std::log(m(i, i));
  if (lu.permutationP().determinant() < 0) acc += cxd(0.0, kPi);
  return acc;
}

}  // namespace detail

struct ClosedFormSolution {
  FixedPointSolution sol;
  cxd phi{};  // log det(M) + 1/2 Tr(G R(G)); an antiderivative of Tr G1(z)
};

// Prop.-3 evaluation engine for deterministic BS->RIS channels. Solutions at
// the requested real spectral points are cached and warm-started in order.
class ClosedFormPipeline {
 public:
  ClosedFormPipeline(const ChannelStats& st, const ThetaState& theta,
                     SolverOptions opts = {})
      : st_(&st), theta_(&theta), lin_(st, theta), opts_(opts) {
    if (!st.deterministic_F())
      throw ContractViolation("closed form requires deterministic BS->RIS channels (F random "
                              "profile must be zero)");
  }

  const ClosedFormSolution& eval(double z) {
    auto hit = cache_.find(z);
    if (hit != cache_.end()) return hit->second;
    const Mat* warm = nullptr;
    if (!cache_.empty()) {
      auto up = cache_.lower_bound(z);
      if (up == cache_.end()) {
        --up;
      } else if (up != cache_.begin()) {
        auto down = std::prev(up);
        if (std::abs(down->first - z) < std::abs(up->first - z)) up = down;
      }
      warm = &up->second.sol.raw.G;
    }
    SolveResult res = solve_fixed_point(lin_, cxd(z, 0.0), opts_, warm);
    ClosedFormSolution cf;
    cf.phi = phi_of(res);
    cf.sol = make_solution(lin_, std::move(res));
    // Prop. 3 zeroes the cross blocks; with deterministic F they are inert.
    cf.sol.G8.setZero();
    cf.sol.G9.setZero();
    cf.sol.PsiTilde12.setZero();
    cf.sol.PsiTilde21.setZero();
    return cache_.emplace(z, std::move(cf)).first->second;
  }

  double phi(double z) { return eval(z).phi.real(); }

  // Difference phi(za) - phi(zb) with the branch-cancellation check.
  double phi_diff(double za, double zb, double im_tol = 1e-6) {
    const cxd d = eval(za).phi - eval(zb).phi;
    if (std::abs(std::remainder(d.imag(), 2.0 * kPi)) > im_tol)
      throw DecompositionError("phi: non-cancelling imaginary part (branch), evaluation invalid");
    return d.real();
  }

  const Prop1Linearization& lin() const { return lin_; }
  const SolverOptions& options() const { return opts_; }

 private:
  cxd phi_of(const SolveResult& res) {
    Eigen::PartialPivLU<Mat> lu(res.M);
    const Mat r = lin_.apply_R(res.G);
    const cxd tr = res.G.cwiseProduct(r.transpose()).sum();
    return detail::logdet(lu) + 0.5 * tr;
  }

  const ChannelStats* st_;
  const ThetaState* theta_;
  Prop1Linearization lin_;
  SolverOptions opts_;
  std::map<double, ClosedFormSolution> cache_;
};

inline ClosedFormSolution solve_simplified(const ChannelStats& st, const ThetaState& theta,
                                           cxd z, const SolverOptions& opts = {}) {
  if (!st.deterministic_F())
    throw ContractViolation("solve_simplified requires deterministic BS->RIS channels");
  if (z.imag() != 0.0) {
    Prop1Linearization lin(st, theta);
    SolveResult res = solve_fixed_point(lin, z, opts);
    ClosedFormSolution cf;
    cf.sol = make_solution(lin, std::move(res));
    cf.sol.G8.setZero();
    cf.sol.G9.setZero();
    return cf;
  }
  ClosedFormPipeline pipe(st, theta, opts);
  return pipe.eval(z.real());
}

struct ClosedFormRates {
  double I1 = 0.0;  // coupled part, nats
  double I2 = 0.0;
  double t = 0.0;
};

// Prop.-3 rates of the coupled subchannels:
//   I1 = phi(-1/(1+a1)) - phi(-1) + (S + m0) log(1+a1)
//   I2 = phi(-1-a2) - phi(-1-k1 a2) - m0 [log(1+a2) - log(1+k1 a2)]
// with m0 = R1 - S zero eigenvalues of B in the coupled-only regime and
// m0 = 0 after augmentation.
inline ClosedFormRates rates_closed_at(ClosedFormPipeline& pipe, const SystemConfig& cfg,
                                       double t) {
  const int S = cfg.S();
  const int m0 = cfg.regime() == Regime::CoupledOnly ? cfg.R1 - S : 0;
  const double a1 = cfg.a1(t);
  const double a2 = cfg.a2(t);

  ClosedFormRates out;
  out.t = t;
  out.I1 = pipe.phi_diff(-1.0 / (1.0 + a1), -1.0) + (S + m0) * std::log1p(a1);
  out.I2 = pipe.phi_diff(-1.0 - a2, -1.0 - cfg.kappa1 * a2) -
           m0 * (std::log1p(a2) - std::log1p(cfg.kappa1 * a2));
  return out;
}

// Full closed-form pipeline (handles augmentation and the exclusive
// subchannels); reports in the configured unit.
inline RateReport rates_closed(const ChannelStats& st, const ThetaState& theta,
                               const SystemConfig& cfg, const AsymptoticOptions& opts = {}) {
  cfg.validate();
  if (cfg.R1 < cfg.R2)
    throw ConfigError("closed-form pipeline requires R1 >= R2; relabel the users");
  if (cfg.regime() == Regime::OrthogonalOnly)
    throw ConfigError("closed-form pipeline: no coupled spectrum for T >= R1+R2");

  const double t = solve_prop2(st, theta, opts.solver).t;
  const bool augmented = cfg.regime() == Regime::Mixed;
  ChannelStats st_aug;
  const ChannelStats* stp = &st;
  if (augmented) {
    st_aug = st.augment_user2(opts.delta);
    stp = &st_aug;
  }
  ClosedFormPipeline pipe(*stp, theta, opts.solver);
  const ClosedFormRates cf = rates_closed_at(pipe, cfg, t);

  RateReport rep;
  rep.I1 = detail::to_unit(cf.I1 + cfg.extra_subchannels(1) * std::log1p(cfg.b1(t)), cfg.unit);
  rep.I2 = detail::to_unit(cf.I2 + cfg.extra_subchannels(2) * std::log1p(cfg.b2(t)), cfg.unit);
  rep.regime = cfg.regime();
  rep.S = cfg.S();
  rep.t = t;
  rep.unit = cfg.unit;
  return rep;
}

}  // namespace starnoma
