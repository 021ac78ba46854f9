#pragma once

#include <atomic>
#include <functional>
#include <numbers>
#include <thread>

#include "starnoma/channel.hpp"
#include "starnoma/gsvd.hpp"

namespace starnoma {

struct RateReport {
  double I1 = 0.0;
  double I2 = 0.0;
  Regime regime = Regime::CoupledOnly;
  int S = 0;
  double t = 0.0;
  RVec mu;
  RateUnit unit = RateUnit::Bits;
  int n_trials = 1;
  std::uint64_t seed = 0;
  double stderr1 = 0.0;
  double stderr2 = 0.0;
  int failures = 0;

  double sum() const { return I1 + I2; }
};

namespace detail {

inline double to_unit(double nats, RateUnit u) {
  return u == RateUnit::Bits ? nats / std::numbers::ln2_v<double> : nats;
}

}  // namespace detail

// Per-realization rates from the GSV ratios. The coupled subchannels carry
// both users' NOMA streams; exclusive subchannels run at full power.
inline RateReport rates_one_shot(const GsvdFactors& g, const SystemConfig& cfg, double t) {
  if (t <= 0.0) throw ContractViolation("rates_one_shot: t must be positive");
  if (g.S != cfg.S() || g.regime != cfg.regime())
    throw ContractViolation("rates_one_shot: factors do not match the configured regime");

  const double a1 = cfg.a1(t);
  const double a2 = cfg.a2(t);
  double i1 = 0.0, i2 = 0.0;
  for (int k = 0; k < g.S; ++k) {
    const double mu = g.mu(k);
    i1 += std::log1p(a1 * mu / (1.0 + mu));
    if (cfg.i2_verbatim) {
      i2 += std::log1p(cfg.kappa2 * cfg.P / (cfg.kappa1 + (1.0 + mu) * t * cfg.sigma0_sq));
    } else {
      i2 += std::log(1.0 + mu + a2) - std::log(1.0 + mu + cfg.kappa1 * a2);
    }
  }
  i1 += cfg.extra_subchannels(1) * std::log1p(cfg.b1(t));
  i2 += cfg.extra_subchannels(2) * std::log1p(cfg.b2(t));

  RateReport rep;
  rep.I1 = detail::to_unit(i1, cfg.unit);
  rep.I2 = detail::to_unit(i2, cfg.unit);
  rep.regime = g.regime;
  rep.S = g.S;
  rep.t = t;
  rep.mu = g.mu;
  rep.unit = cfg.unit;
  return rep;
}

// SIC is placed at user 1 iff E[Tr(rho1 H1 H1^H)] > E[Tr(rho2 H2 H2^H)];
// both traces are available in closed form from the statistics.
inline bool check_sic_order(const ChannelStats& st, const ThetaState& theta,
                            const SystemConfig& cfg) {
  auto expected_trace = [&](int i) {
    double g = expected_direct_gain(st, i);
    for (int k = 1; k <= st.K; ++k) g += expected_reflected_gain(st, k, i, theta);
    // Cross terms between the direct LoS and the reflected LoS paths.
    Mat hbar = st.rlink(i, 0).mean;
    for (int k = 1; k <= st.K; ++k)
      hbar += st.rlink(i, k).mean * theta.panel(i, k - 1).asDiagonal() * st.f[k - 1].mean;
    g += hbar.squaredNorm() - st.rlink(i, 0).mean.squaredNorm();
    for (int k = 1; k <= st.K; ++k)
      g -= (st.rlink(i, k).mean * theta.panel(i, k - 1).asDiagonal() * st.f[k - 1].mean)
               .squaredNorm();
    return g;
  };
  return cfg.rho1 * expected_trace(1) > cfg.rho2 * expected_trace(2);
}

struct McOptions {
  int threads = 1;
  double max_failure_fraction = 0.01;
  // Optional per-trial sink: (trial, seed, regime, I1, I2, t).
  std::function<void(int, std::uint64_t, Regime, double, double, double)> on_trial;
};

// Seed-reproducible Monte-Carlo average of rates_one_shot; the per-trial
// power factor is exact. Aggregation order is fixed by trial index, so the
// result is independent of the worker count.
inline RateReport mc_average(const ChannelStats& st, const ThetaState& theta,
                             const SystemConfig& cfg, int n_trials, std::uint64_t seed,
                             const McOptions& opts = {}) {
  if (n_trials < 1) throw ConfigError("mc_average: n_trials must be >= 1");

  struct Trial {
    double i1 = 0, i2 = 0, t = 0;
    bool ok = false;
  };
  std::vector<Trial> trials(n_trials);

  auto run_trial = [&](int idx) {
    const std::uint64_t trial_seed = mix_seed(seed, idx);
    try {
      const ChannelRealization chan = sample_realization(st, theta, trial_seed);
      const GsvdFactors g = gsvd(chan.H1, chan.H2);
      const double t = cfg.T >= cfg.R1 + cfg.R2 ? power_factor_from_v(g)
                                                : power_factor_exact(chan.H1, chan.H2);
      const RateReport rep = rates_one_shot(g, cfg, t);
      trials[idx] = {rep.I1, rep.I2, t, true};
    } catch (const std::exception&) {
      trials[idx].ok = false;
    }
  };

  const int workers = std::max(1, opts.threads);
  if (workers == 1 || n_trials < 4) {
    for (int i = 0; i < n_trials; ++i) run_trial(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&]() {
        for (int i = next.fetch_add(1); i < n_trials; i = next.fetch_add(1)) run_trial(i);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<double> v1, v2, vt;
  int failures = 0;
  for (int i = 0; i < n_trials; ++i) {
    if (!trials[i].ok) {
      ++failures;
      continue;
    }
    v1.push_back(trials[i].i1);
    v2.push_back(trials[i].i2);
    vt.push_back(trials[i].t);
    if (opts.on_trial)
      opts.on_trial(i, mix_seed(seed, i), cfg.regime(), trials[i].i1, trials[i].i2, trials[i].t);
  }
  if (failures > opts.max_failure_fraction * n_trials)
    throw DecompositionError("mc_average: " + std::to_string(failures) + "/" +
                             std::to_string(n_trials) + " trials failed to decompose");

  const auto n = static_cast<double>(v1.size());
  RateReport rep;
  rep.I1 = pairwise_sum(v1) / n;
  rep.I2 = pairwise_sum(v2) / n;
  rep.t = pairwise_sum(vt) / n;
  std::vector<double> d1(v1.size()), d2(v2.size());
  for (std::size_t i = 0; i < v1.size(); ++i) {
    d1[i] = (v1[i] - rep.I1) * (v1[i] - rep.I1);
    d2[i] = (v2[i] - rep.I2) * (v2[i] - rep.I2);
  }
  rep.stderr1 = n > 1 ? std::sqrt(pairwise_sum(d1) / (n * (n - 1))) : 0.0;
  rep.stderr2 = n > 1 ? std::sqrt(pairwise_sum(d2) / (n * (n - 1))) : 0.0;
  rep.regime = cfg.regime();
  rep.S = cfg.S();
  rep.unit = cfg.unit;
  rep.n_trials = n_trials;
  rep.seed = seed;
  rep.failures = failures;
  return rep;
}

}  // namespace starnoma
