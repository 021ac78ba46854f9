#pragma once

#include <algorithm>
#include <numeric>

#include "starnoma/common.hpp"

namespace starnoma {

enum class RateUnit { Bits, Nats };

// Antenna regime, split by T against m_hat = min(R1,R2) and R1+R2.
enum class Regime { CoupledOnly, Mixed, OrthogonalOnly };

struct SystemConfig {
  int T = 1;
  int R1 = 1;
  int R2 = 1;
  int K = 0;
  std::vector<int> L;       // elements per STAR-RIS panel, size K
  double P = 1.0;           // transmit power (linear)
  double sigma0_sq = 1.0;   // noise variance (linear)
  double kappa1 = 0.5;
  double kappa2 = 0.5;
  double rho1 = 1.0;
  double rho2 = 1.0;
  RateUnit unit = RateUnit::Bits;
  // Eq.-(14) denominator exactly as printed; the alternative is the
  // per-subchannel SINR derived from the Sigma_i structure and the SIC model.
  bool i2_verbatim = true;
  // Fold P into the effective per-user gains of the asymptotic pipelines so
  // they match the Monte-Carlo formulas for P != 1.
  bool fold_power = true;

  int total_L() const { return std::accumulate(L.begin(), L.end(), 0); }

  // Number of coupled generalized-singular-value pairs.
  int S() const {
    return std::min(R1, T) + std::min(R2, T) - std::min(R1 + R2, T);
  }

  Regime regime() const {
    if (T >= R1 + R2) return Regime::OrthogonalOnly;
    if (T <= std::min(R1, R2)) return Regime::CoupledOnly;
    return Regime::Mixed;
  }

  // Count of user-i-exclusive unit subchannels (identity blocks of Sigma_i).
  int extra_subchannels(int user) const {
    if (T >= R1 + R2) return user == 1 ? R1 : R2;
    const int other = user == 1 ? R2 : R1;
    return std::min(R1 + R2, T) - std::min(other, T);
  }

  void validate() const {
    if (T < 1 || R1 < 1 || R2 < 1 || K < 0) throw ConfigError("antenna/panel counts must be >= 1");
    if (static_cast<int>(L.size()) != K) throw ConfigError("L must list one size per panel");
    for (int lk : L)
      if (lk < 1) throw ConfigError("panel sizes must be >= 1");
    if (P <= 0 || sigma0_sq <= 0) throw ConfigError("P and sigma0_sq must be positive");
    if (rho1 <= 0 || rho2 <= 0) throw ConfigError("relative gains must be positive");
    if (kappa1 < 0 || kappa1 > 1 || kappa2 < 0 || kappa2 > 1 ||
        std::abs(kappa1 + kappa2 - 1.0) > 1e-12)
      throw ConfigError("kappa1 + kappa2 must equal 1 with both in [0,1]");
  }

  // Effective per-user SNR scalars of the rate expressions. a1 multiplies the
  // coupled user-1 subchannels (kappa1 included), a2/b are the user-2 and
  // full-power scales. With fold_power off, P is excluded to mirror the
  // bare integral limits.
  double pw() const { return fold_power ? P : 1.0; }
  double a1(double t) const { return pw() * kappa1 * rho1 / (t * sigma0_sq); }
  double a2(double t) const { return pw() * rho2 / (t * sigma0_sq); }
  double b1(double t) const { return pw() * rho1 / (t * sigma0_sq); }
  double b2(double t) const { return pw() * rho2 / (t * sigma0_sq); }
};

// Per-element STAR-RIS state: two complex vectors with entries
// sqrt(beta) * exp(j*theta); |theta1(l)|^2 + |theta2(l)|^2 = 1 elementwise.
struct ThetaState {
  std::vector<int> L;
  Vec side1, side2;  // length sum(L)

  static ThetaState uniform_split(const std::vector<int>& panels) {
    ThetaState s;
    s.L = panels;
    const int total = std::accumulate(panels.begin(), panels.end(), 0);
    s.side1 = Vec::Constant(total, cxd(std::sqrt(0.5), 0.0));
    s.side2 = s.side1;
    return s;
  }

  // Random phases, beta = 0.5/0.5 split (Alg.-1 initialization).
  static ThetaState random(const std::vector<int>& panels, std::uint64_t seed) {
    ThetaState s = uniform_split(panels);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
    const double amp = std::sqrt(0.5);
    for (int l = 0; l < s.side1.size(); ++l) {
      s.side1(l) = std::polar(amp, u(rng));
      s.side2(l) = std::polar(amp, u(rng));
    }
    return s;
  }

  static ThetaState from_values(const std::vector<int>& panels, Vec th1, Vec th2) {
    ThetaState s;
    s.L = panels;
    s.side1 = std::move(th1);
    s.side2 = std::move(th2);
    const int total = std::accumulate(panels.begin(), panels.end(), 0);
    if (s.side1.size() != total || s.side2.size() != total)
      throw ConfigError("theta vectors must have sum(L) entries");
    s.check();
    return s;
  }

  const Vec& side(int i) const { return i == 1 ? side1 : side2; }
  Vec& side(int i) { return i == 1 ? side1 : side2; }

  int panel_offset(int k) const {
    int off = 0;
    for (int j = 0; j < k; ++j) off += L[j];
    return off;
  }

  Vec panel(int i, int k) const { return side(i).segment(panel_offset(k), L[k]); }

  void check(double tol = 1e-12) const {
    for (int l = 0; l < side1.size(); ++l) {
      const double p = std::norm(side1(l)) + std::norm(side2(l));
      if (std::abs(p - 1.0) > tol)
        throw ContractViolation("theta power split violated: |t1|^2+|t2|^2 != 1");
    }
  }
};

}  // namespace starnoma
