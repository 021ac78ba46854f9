#pragma once

#include "starnoma/closed_form.hpp"

namespace starnoma {

// d phi / d theta_i^*(l) at one spectral point, from the converged resolvent.
// Two contributions: the explicit Theta in Gbar_i inside Lbar, and the Theta
// conjugations inside the R-transform (envelope theorem removes dG terms).
inline std::pair<Vec, Vec> gradient_phi(const ClosedFormSolution& cf,
                                        const Prop1Linearization& lin, const ChannelStats& st,
                                        const ThetaState& theta) {
  using G = Prop1Linearization::Group;
  const Mat& minv = cf.sol.raw.Minv;
  const Mat& g = cf.sol.raw.G;
  const int L = theta.side1.size();
  Vec grad1(L), grad2(L);

  // User 1: -(Rbar1^H Minv[G1,G7]) diagonal - [eta_{k,1}(G1) Theta1 G7_kk] diagonal.
  // User 2: +(Rbar2^H Minv[G5,G4]) diagonal - [eta_{k,2}(G5) Theta2 G4_kk] diagonal.
  for (int user = 1; user <= 2; ++user) {
    const int ru = user == 1 ? st.R1 : st.R2;
    Mat rbar = Mat::Zero(ru, ru + L);
    rbar.leftCols(ru) = Mat::Identity(ru, ru);
    for (int k = 0; k < st.K; ++k)
      rbar.block(0, ru + theta.panel_offset(k), ru, st.L[k]) = st.rlink(user, k + 1).mean;

    const auto rowg = user == 1 ? G::G1 : G::G5;
    const auto colg = user == 1 ? G::G7 : G::G4;
    const Mat mblk = minv.block(lin.group_offset(rowg), lin.group_offset(colg),
                                lin.group_size(rowg), lin.group_size(colg));
    const Vec adiag = (rbar.adjoint() * mblk).diagonal().tail(L);
    const double sgn = user == 1 ? -1.0 : 1.0;

    const Mat guser = g.block(lin.group_offset(rowg), lin.group_offset(rowg),
                              lin.group_size(rowg), lin.group_size(rowg));
    Vec& out = user == 1 ? grad1 : grad2;
    for (int k = 0; k < st.K; ++k) {
      const int lk = st.L[k];
      const int off = theta.panel_offset(k);
      const Mat eta_g = detail::corr_right(st.rlink(user, k + 1), guser);
      const Mat gstack =
          g.block(lin.panel_offset(colg, k), lin.panel_offset(colg, k), lk, lk);
      const Vec bdiag = (eta_g * theta.panel(user, k).asDiagonal() * gstack).diagonal();
      out.segment(off, lk) = sgn * adiag.segment(off, lk) - bdiag;
    }
  }
  return {grad1, grad2};
}

// Elementwise projection onto |theta1(l)|^2 + |theta2(l)|^2 = 1.
inline ThetaState project(const std::vector<int>& panels, const Vec& raw1, const Vec& raw2) {
  Vec t1 = raw1, t2 = raw2;
  for (int l = 0; l < t1.size(); ++l) {
    const double nrm = std::sqrt(std::norm(t1(l)) + std::norm(t2(l)));
    if (nrm == 0.0)
      throw ContractViolation("project: both sides zero at element " + std::to_string(l));
    t1(l) /= nrm;
    t2(l) /= nrm;
  }
  return ThetaState::from_values(panels, std::move(t1), std::move(t2));
}

inline ThetaState project(const ThetaState& raw) {
  return project(raw.L, raw.side1, raw.side2);
}

struct PgamIterate {
  int iter = 0;
  double sum_rate = 0.0;       // true objective, t refreshed
  double step = 0.0;
  double grad_norm = 0.0;
  double projection_residual = 0.0;
};

struct PgamTrace {
  std::vector<PgamIterate> iterates;
  bool converged = false;
  bool stalled = false;
  ThetaState theta;
  double I1 = 0.0, I2 = 0.0, t = 0.0;  // at the final iterate, cfg units
};

struct PgamOptions {
  double eps = 1e-4;
  int max_iters = 50;
  double armijo_c1 = 1e-4;
  double shrink = 0.5;
  double min_step = 1e-14;
  SolverOptions solver;
  double delta = 1e-4;
};

namespace detail {

struct SumRateEval {
  double J = 0.0;  // cfg units, exclusive subchannels included
  double I1 = 0.0, I2 = 0.0, t = 0.0;
  std::array<double, 4> zpts{};
  std::shared_ptr<ClosedFormPipeline> pipe;
};

class PgamEngine {
 public:
  PgamEngine(const ChannelStats& st, const SystemConfig& cfg, const PgamOptions& opts)
      : cfg_(cfg), opts_(opts) {
    if (!st.deterministic_F())
      throw ContractViolation("pgam requires deterministic BS->RIS channels");
    if (cfg.regime() == Regime::Mixed)
      st_ = st.augment_user2(opts.delta);
    else if (cfg.regime() == Regime::CoupledOnly)
      st_ = st;
    else
      throw ConfigError("pgam: no coupled spectrum for T >= R1+R2");
  }

  const ChannelStats& stats() const { return st_; }

  double unit_scale() const {
    return cfg_.unit == RateUnit::Bits ? 1.0 / std::numbers::ln2_v<double> : 1.0;
  }

  // Sum rate with t refreshed (refresh=true) or held at t_fixed.
  SumRateEval evaluate(const ThetaState& theta, bool refresh, double t_fixed = 0.0) {
    SumRateEval ev;
    ev.t = refresh ? solve_prop2(st_, theta, opts_.solver).t : t_fixed;
    ev.pipe = std::make_shared<ClosedFormPipeline>(st_, theta, opts_.solver);
    const ClosedFormRates cf = rates_closed_at(*ev.pipe, cfg_, ev.t);
    ev.I1 = (cf.I1 + cfg_.extra_subchannels(1) * std::log1p(cfg_.b1(ev.t))) * unit_scale();
    ev.I2 = (cf.I2 + cfg_.extra_subchannels(2) * std::log1p(cfg_.b2(ev.t))) * unit_scale();
    ev.J = ev.I1 + ev.I2;
    const double a1 = cfg_.a1(ev.t), a2 = cfg_.a2(ev.t);
    ev.zpts = {-1.0 / (1.0 + a1), -1.0, -1.0 - a2, -1.0 - cfg_.kappa1 * a2};
    return ev;
  }

  // delta_i = 2 d(I1+I2)/d theta_i^* at fixed t, from the four phi points.
  std::pair<Vec, Vec> gradient(const SumRateEval& ev, const ThetaState& theta) {
    const double scale = 2.0 * unit_scale();
    const double sign[4] = {1.0, -1.0, 1.0, -1.0};
    const int L = theta.side1.size();
    Vec d1 = Vec::Zero(L), d2 = Vec::Zero(L);
    for (int p = 0; p < 4; ++p) {
      // kappa1 = 1 makes the two I2 points coincide; their contributions cancel.
      if (p == 2 && ev.zpts[2] == ev.zpts[3]) break;
      const ClosedFormSolution& cf = ev.pipe->eval(ev.zpts[p]);
      auto [g1, g2] = gradient_phi(cf, ev.pipe->lin(), st_, theta);
      d1 += scale * sign[p] * g1;
      d2 += scale * sign[p] * g2;
    }
    return {d1, d2};
  }

 private:
  ChannelStats st_;
  SystemConfig cfg_;
  PgamOptions opts_;
};

}  // namespace detail

inline std::pair<Vec, Vec> gradient_sum_rate(const ChannelStats& st, const ThetaState& theta,
                                             const SystemConfig& cfg,
                                             const PgamOptions& opts = {}) {
  detail::PgamEngine engine(st, cfg, opts);
  auto ev = engine.evaluate(theta, true);
  return engine.gradient(ev, theta);
}

// Projected gradient ascent (Alg.-1 structure): gradient and line search at
// the iterate's t, t refreshed once per accepted step, Armijo backtracking
// with a Barzilai-Borwein initial step.
inline PgamTrace optimize(const ChannelStats& st, const SystemConfig& cfg,
                          const ThetaState& theta0, const PgamOptions& opts = {}) {
  if (opts.eps <= 0.0) throw ConfigError("pgam: eps must be positive");
  detail::PgamEngine engine(st, cfg, opts);

  PgamTrace trace;
  ThetaState theta = theta0;
  theta.check();
  auto ev = engine.evaluate(theta, true);
  auto [d1, d2] = engine.gradient(ev, theta);
  trace.iterates.push_back({0, ev.J, 0.0, std::sqrt(d1.squaredNorm() + d2.squaredNorm()), 0.0});

  double alpha = 0.1 / std::max(1e-12, std::max(d1.cwiseAbs().maxCoeff(),
                                                d2.cwiseAbs().maxCoeff()));
  Vec prev_step1, prev_step2, prev_d1 = d1, prev_d2 = d2;

  for (int j = 1; j <= opts.max_iters; ++j) {
    double step = alpha;
    bool accepted = false;
    ThetaState theta_new = theta;
    detail::SumRateEval ev_new;

    while (step >= opts.min_step) {
      const Vec raw1 = theta.side1 + step * d1;
      const Vec raw2 = theta.side2 + step * d2;
      ThetaState cand = project(theta.L, raw1, raw2);
      const double dd = ((d1.adjoint() * (cand.side1 - theta.side1)).real() +
                         (d2.adjoint() * (cand.side2 - theta.side2)).real())(0, 0);
      auto ev_fixed = engine.evaluate(cand, false, ev.t);
      if (ev_fixed.J >= ev.J + opts.armijo_c1 * std::max(dd, 0.0)) {
        auto ev_true = engine.evaluate(cand, true);
        if (ev_true.J + 1e-12 >= ev.J) {
          theta_new = std::move(cand);
          ev_new = std::move(ev_true);
          accepted = true;
          trace.iterates.push_back(
              {j, ev_new.J, step,
               std::sqrt(d1.squaredNorm() + d2.squaredNorm()),
               std::sqrt((theta_new.side1 - raw1).squaredNorm() +
                         (theta_new.side2 - raw2).squaredNorm())});
          break;
        }
      }
      step *= opts.shrink;
    }
    if (!accepted) {
      trace.stalled = true;
      break;
    }

    const double dj = std::abs(ev_new.J - ev.J);
    const Vec s1 = theta_new.side1 - theta.side1;
    const Vec s2 = theta_new.side2 - theta.side2;
    theta = std::move(theta_new);
    ev = std::move(ev_new);
    std::tie(d1, d2) = engine.gradient(ev, theta);

    // BB2 step from the last move and gradient change.
    const Vec y1 = d1 - prev_d1, y2 = d2 - prev_d2;
    const double sy = std::abs((s1.adjoint() * y1).real()(0, 0) +
                               (s2.adjoint() * y2).real()(0, 0));
    const double yy = y1.squaredNorm() + y2.squaredNorm();
    alpha = (yy > 0 && sy > 0) ? std::clamp(sy / yy, 1e-8, 1e4) : step;
    prev_d1 = d1;
    prev_d2 = d2;

    if (dj < opts.eps) {
      trace.converged = true;
      break;
    }
  }

  trace.theta = theta;
  trace.I1 = ev.I1;
  trace.I2 = ev.I2;
  trace.t = ev.t;
  return trace;
}

// Component of the ascent direction tangent to the per-element power
// constraint; vanishes at a constrained stationary point.
inline double projected_gradient_norm(const ThetaState& theta, const Vec& d1, const Vec& d2) {
  double acc = 0.0;
  for (int l = 0; l < theta.side1.size(); ++l) {
    const double radial =
        (std::conj(theta.side1(l)) * d1(l) + std::conj(theta.side2(l)) * d2(l)).real();
    acc += std::norm(d1(l) - radial * theta.side1(l)) +
           std::norm(d2(l) - radial * theta.side2(l));
  }
  return std::sqrt(acc);
}

}  // namespace starnoma
