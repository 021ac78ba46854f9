#pragma once

#include "starnoma/config.hpp"

namespace starnoma {

// One Weichselberger-structured Rician link A = mean + left (profile .* X) right^H
// with X i.i.d. CN(0, 1/denom). left/right are the eigenbasis unitaries, the
// nonnegative profile controls the per-eigenmode variances.
struct LinkStats {
  Mat mean;      // rows x cols LoS component
  Mat left;      // rows x rows unitary
  Mat right;     // cols x cols unitary
  RMat profile;  // rows x cols, entries >= 0
  double denom = 1.0;

  int rows() const { return static_cast<int>(mean.rows()); }
  int cols() const { return static_cast<int>(mean.cols()); }

  bool deterministic() const { return profile.cwiseAbs().maxCoeff() == 0.0; }

  // Total fluctuation mass E||A - mean||_F^2 = sum(profile^2)/denom.
  double variance_mass() const { return profile.squaredNorm() / denom; }

  void validate(double unitary_tol = 1e-12) const {
    const int r = rows(), c = cols();
    if (left.rows() != r || left.cols() != r || right.rows() != c || right.cols() != c ||
        profile.rows() != r || profile.cols() != c)
      throw ConfigError("link statistics dimensions inconsistent");
    if ((left * left.adjoint() - Mat::Identity(r, r)).norm() > unitary_tol * r ||
        (right * right.adjoint() - Mat::Identity(c, c)).norm() > unitary_tol * c)
      throw ConfigError("link eigenbasis factor not unitary");
    if (profile.minCoeff() < 0.0) throw ConfigError("variance profile has negative entries");
    if (denom <= 0.0) throw ConfigError("variance denominator must be positive");
  }
};

// Uniform planar array response, lambda/2 spacing, unit-modulus entries.
// n is factored into the most square grid available.
inline Vec upa_steering(int n, double azimuth, double elevation) {
  int nh = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  while (nh > 1 && n % nh != 0) --nh;
  const int nv = n / nh;
  const double u = std::sin(elevation) * std::cos(azimuth);
  const double v = std::sin(elevation) * std::sin(azimuth);
  Vec a(n);
  for (int q = 0; q < nv; ++q)
    for (int p = 0; p < nh; ++p) a(q * nh + p) = std::polar(1.0, kPi * (p * u + q * v));
  return a;
}

struct StatsOptions {
  double los_amp = 1.0;        // amplitude applied to every steering outer product
  bool deterministic_F = false;  // zero variance profile on every BS->RIS link
  // Optional explicit angles per link; empty -> drawn from the scenario seed.
  // Order: F_1..F_K, then user 1 links (k=0..K), then user 2 links.
  std::vector<std::array<double, 4>> angles;  // {az_rx, el_rx, az_tx, el_tx}
};

// All deterministic statistics of the channel ensemble: the BS->RIS links
// f[k], and per user i the direct link r[i][0] (R_i x T) plus RIS->user
// links r[i][k] (R_i x L_k).
struct ChannelStats {
  int T = 0, R1 = 0, R2 = 0, K = 0;
  std::vector<int> L;
  std::vector<LinkStats> f;                 // size K
  std::array<std::vector<LinkStats>, 2> r;  // each size K+1

  int R(int user) const { return user == 1 ? R1 : R2; }
  const LinkStats& rlink(int user, int k) const { return r[user - 1][k]; }
  LinkStats& rlink(int user, int k) { return r[user - 1][k]; }

  bool deterministic_F() const {
    for (const auto& lk : f)
      if (!lk.deterministic()) return false;
    return true;
  }

  void validate() const {
    if (static_cast<int>(f.size()) != K || static_cast<int>(r[0].size()) != K + 1 ||
        static_cast<int>(r[1].size()) != K + 1)
      throw ConfigError("channel statistics link counts inconsistent");
    for (int k = 0; k < K; ++k) {
      f[k].validate();
      if (f[k].rows() != L[k] || f[k].cols() != T) throw ConfigError("F_k link dimensions wrong");
    }
    for (int i = 1; i <= 2; ++i) {
      for (int k = 0; k <= K; ++k) {
        const auto& lk = rlink(i, k);
        lk.validate();
        if (lk.rows() != R(i) || lk.cols() != (k == 0 ? T : L[k - 1]))
          throw ConfigError("R_{k,i} link dimensions wrong");
      }
    }
  }

  static ChannelStats generate(const SystemConfig& cfg, std::uint64_t seed,
                               const StatsOptions& opts = {});

  // Statistics of the pair (H1, [H2; Delta*I_hat]) for R2 < T < R1+R2: user 2
  // gains T-R2 deterministic rows so that the augmented Gram is invertible.
  ChannelStats augment_user2(double delta) const;
};

namespace detail {

inline LinkStats make_link(int rows, int cols, double denom, double los_amp,
                           const std::array<double, 4>& ang, bool zero_profile,
                           std::mt19937_64& rng) {
  LinkStats lk;
  lk.mean = los_amp * upa_steering(rows, ang[0], ang[1]) *
            upa_steering(cols, ang[2], ang[3]).adjoint();
  lk.left = random_unitary(rows, rng);
  lk.right = random_unitary(cols, rng);
  if (zero_profile) {
    lk.profile = RMat::Zero(rows, cols);
  } else {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    lk.profile = RMat::NullaryExpr(rows, cols, [&]() { return u01(rng); });
  }
  lk.denom = denom;
  return lk;
}

}  // namespace detail

inline ChannelStats ChannelStats::generate(const SystemConfig& cfg, std::uint64_t seed,
                                           const StatsOptions& opts) {
  cfg.validate();
  ChannelStats st;
  st.T = cfg.T;
  st.R1 = cfg.R1;
  st.R2 = cfg.R2;
  st.K = cfg.K;
  st.L = cfg.L;

  std::mt19937_64 rng(mix_seed(seed, 0));
  std::uniform_real_distribution<double> uaz(0.0, 2.0 * kPi);
  std::uniform_real_distribution<double> uel(0.0, kPi);
  std::size_t angle_idx = 0;
  auto next_angles = [&]() -> std::array<double, 4> {
    if (angle_idx < opts.angles.size()) return opts.angles[angle_idx++];
    ++angle_idx;
    return {uaz(rng), uel(rng), uaz(rng), uel(rng)};
  };

  for (int k = 0; k < cfg.K; ++k)
    st.f.push_back(detail::make_link(cfg.L[k], cfg.T, cfg.T, opts.los_amp, next_angles(),
                                     opts.deterministic_F, rng));
  for (int i = 1; i <= 2; ++i) {
    st.r[i - 1].push_back(
        detail::make_link(st.R(i), cfg.T, st.R(i), opts.los_amp, next_angles(), false, rng));
    for (int k = 0; k < cfg.K; ++k)
      st.r[i - 1].push_back(
          detail::make_link(st.R(i), cfg.L[k], cfg.L[k], opts.los_amp, next_angles(), false, rng));
  }
  st.validate();
  return st;
}

inline ChannelStats ChannelStats::augment_user2(double delta) const {
  if (!(R2 < T && T < R1 + R2))
    throw ContractViolation("augmentation applies only for R2 < T < R1+R2");
  const int extra = T - R2;
  ChannelStats st = *this;
  st.R2 = T;
  for (int k = 0; k <= K; ++k) {
    LinkStats& lk = st.r[1][k];
    const int cols = lk.cols();
    Mat mean = Mat::Zero(T, cols);
    mean.topRows(R2) = lk.mean;
    if (k == 0)
      for (int j = 0; j < extra; ++j) mean(R2 + j, j) = delta;  // Delta * [I 0] rows
    Mat left = Mat::Identity(T, T);
    left.topLeftCorner(R2, R2) = lk.left;
    RMat profile = RMat::Zero(T, cols);
    profile.topRows(R2) = lk.profile;
    lk.mean = std::move(mean);
    lk.left = std::move(left);
    lk.profile = std::move(profile);
  }
  return st;
}

}  // namespace starnoma
