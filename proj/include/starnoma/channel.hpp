#pragma once

#include "starnoma/stats.hpp"

namespace starnoma {

namespace detail {

// E[A^H C A] for the fluctuation part of a link: (1/denom) S Pi(C) S^H with
// [Pi]_ll = sum_j profile(j,l)^2 [T^H C T]_jj. Linear in C, no Hermitian check.
inline Mat corr_right(const LinkStats& lk, const Mat& c) {
  const Vec d = (lk.left.adjoint() * c * lk.left).diagonal();
  const RMat p2 = lk.profile.array().square().matrix();
  const Vec pi = (p2.transpose().cast<cxd>() * d) / lk.denom;
  return lk.right * pi.asDiagonal() * lk.right.adjoint();
}

// E[A C A^H]: (1/denom) T PiTilde(C) T^H with [PiTilde]_ll = sum_j profile(l,j)^2 [S^H C S]_jj.
inline Mat corr_left(const LinkStats& lk, const Mat& c) {
  const Vec d = (lk.right.adjoint() * c * lk.right).diagonal();
  const RMat p2 = lk.profile.array().square().matrix();
  const Vec pi = (p2.cast<cxd>() * d) / lk.denom;
  return lk.left * pi.asDiagonal() * lk.left.adjoint();
}

}  // namespace detail

// Parameterized one-sided correlation operators of the RIS/user links
// (eta, eta_tilde) and of the BS->RIS links (zeta, zeta_tilde).
inline Mat eta(const ChannelStats& st, int k, int i, const Mat& ctilde) {
  require_hermitian(ctilde, 1e-8, "eta");
  return detail::corr_right(st.rlink(i, k), ctilde);
}

inline Mat eta_tilde(const ChannelStats& st, int k, int i, const Mat& c) {
  require_hermitian(c, 1e-8, "eta_tilde");
  return detail::corr_left(st.rlink(i, k), c);
}

inline Mat zeta(const ChannelStats& st, int k, const Mat& d) {
  require_hermitian(d, 1e-8, "zeta");
  return detail::corr_right(st.f[k - 1], d);
}

inline Mat zeta_tilde(const ChannelStats& st, int k, const Mat& dtilde) {
  require_hermitian(dtilde, 1e-8, "zeta_tilde");
  return detail::corr_left(st.f[k - 1], dtilde);
}

struct ChannelRealization {
  std::vector<Mat> F;                 // size K, L_k x T
  std::array<std::vector<Mat>, 2> R;  // each size K+1; [i][0] is R_i x T
  Mat H1, H2;

  const Mat& H(int user) const { return user == 1 ? H1 : H2; }
};

// Draws one realization of every link and assembles
// H_i = R_{0,i} + sum_k R_{k,i} Theta_{k,i} F_k. Deterministic given the seed.
inline ChannelRealization sample_realization(const ChannelStats& st, const ThetaState& theta,
                                             std::uint64_t seed) {
  if (static_cast<int>(theta.L.size()) != st.K)
    throw ConfigError("theta panel count does not match statistics");
  for (int k = 0; k < st.K; ++k)
    if (theta.L[k] != st.L[k]) throw ConfigError("theta panel sizes do not match statistics");
  theta.check();

  std::mt19937_64 rng(mix_seed(seed, 0x5ca1ab1e));
  auto draw = [&](const LinkStats& lk) -> Mat {
    const Mat x = complex_gaussian(lk.rows(), lk.cols(), 1.0 / lk.denom, rng);
    return lk.mean + lk.left * (lk.profile.cast<cxd>().cwiseProduct(x)) * lk.right.adjoint();
  };

  ChannelRealization out;
  for (int k = 0; k < st.K; ++k) out.F.push_back(draw(st.f[k]));
  for (int i = 1; i <= 2; ++i)
    for (int k = 0; k <= st.K; ++k) out.R[i - 1].push_back(draw(st.rlink(i, k)));

  for (int i = 1; i <= 2; ++i) {
    Mat h = out.R[i - 1][0];
    for (int k = 1; k <= st.K; ++k)
      h += out.R[i - 1][k] * theta.panel(i, k - 1).asDiagonal() * out.F[k - 1];
    (i == 1 ? out.H1 : out.H2) = h;
  }
  return out;
}

// Expected squared Frobenius gain E||R Theta F||_F^2 of one reflected link,
// and E||R_{0,i}||_F^2 of a direct link; both in closed form.
inline double expected_reflected_gain(const ChannelStats& st, int k, int i,
                                      const ThetaState& theta) {
  const Mat th = theta.panel(i, k - 1).asDiagonal();
  const LinkStats& fk = st.f[k - 1];
  Mat cf = fk.mean * fk.mean.adjoint() + detail::corr_left(fk, Mat::Identity(st.T, st.T));
  const Mat a = th * cf * th.adjoint();
  const LinkStats& rk = st.rlink(i, k);
  return std::real((rk.mean * a * rk.mean.adjoint()).trace() +
                   detail::corr_left(rk, a).trace());
}

inline double expected_direct_gain(const ChannelStats& st, int i) {
  const LinkStats& r0 = st.rlink(i, 0);
  return r0.mean.squaredNorm() + r0.variance_mass();
}

// Rescales the direct-link statistics so the expected direct gain matches the
// mean expected per-panel reflected gain for each user.
inline ChannelStats normalize_direct_gain(const ChannelStats& st, const ThetaState& theta) {
  if (st.K == 0) return st;
  ChannelStats out = st;
  for (int i = 1; i <= 2; ++i) {
    double target = 0;
    for (int k = 1; k <= st.K; ++k) target += expected_reflected_gain(st, k, i, theta);
    target /= st.K;
    const double cur = expected_direct_gain(st, i);
    if (target <= 0.0) throw DecompositionError("zero reflected gain: nothing to normalize to");
    if (cur <= 0.0) throw DecompositionError("zero direct gain: cannot rescale");
    const double s = std::sqrt(target / cur);
    out.rlink(i, 0).mean *= s;
    out.rlink(i, 0).profile *= s;
  }
  return out;
}

}  // namespace starnoma
