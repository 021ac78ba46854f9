#pragma once

#include "starnoma/channel.hpp"

namespace starnoma {

struct Slot {
  int row = 0, col = 0, rows = 0, cols = 0;
};

namespace detail {

inline Mat project_slots(const Mat& m, const std::vector<Slot>& slots) {
  Mat out = Mat::Zero(m.rows(), m.cols());
  for (const Slot& s : slots)
    out.block(s.row, s.col, s.rows, s.cols) = m.block(s.row, s.col, s.rows, s.cols);
  return out;
}

inline Mat theta_conj(const Vec& th, const Mat& m, bool adjoint_on_left) {
  // adjoint_on_left: diag(th)^H m diag(th); otherwise diag(th) m diag(th)^H.
  if (adjoint_on_left) return th.conjugate().asDiagonal() * m * th.asDiagonal();
  return th.asDiagonal() * m * th.conjugate().asDiagonal();
}

}  // namespace detail

// Linearization of B = H1 (H2^H H2)^{-1} H1^H: a Hermitian n x n block matrix
// with n = 3 R1 + 3 R2 + 4 L + T whose (1,1) resolvent corner is (zI - B)^{-1}.
// Seven block groups; groups 2/4/6/7 are [R | L_1 | ... | L_K] stacks.
class Prop1Linearization {
 public:
  enum Group { G1 = 0, G2, G3, G4, G5, G6, G7 };

  Prop1Linearization(const ChannelStats& st, const ThetaState& theta)
      : st_(&st), theta_(&theta), use_zeta_(!st.deterministic_F()) {
    R1_ = st.R1;
    R2_ = st.R2;
    T_ = st.T;
    K_ = st.K;
    Ltot_ = 0;
    for (int lk : st.L) Ltot_ += lk;
    const int sz[7] = {R1_, R1_ + Ltot_, T_, R2_ + Ltot_, R2_, R2_ + Ltot_, R1_ + Ltot_};
    int off = 0;
    for (int gidx = 0; gidx < 7; ++gidx) {
      goff_[gidx] = off;
      gsz_[gidx] = sz[gidx];
      off += sz[gidx];
    }
    n_ = off;
    poff_.resize(K_);
    int p = 0;
    for (int k = 0; k < K_; ++k) {
      poff_[k] = p;  // offset past the leading R block
      p += st.L[k];
    }
    build_slots();
    build_lbar();
  }

  int n() const { return n_; }
  int group_offset(Group gg) const { return goff_[gg]; }
  int group_size(Group gg) const { return gsz_[gg]; }
  const Mat& lbar() const { return lbar_; }
  const std::vector<Slot>& slots() const { return slots_; }

  // Offset of panel k inside a [R | L...] group (gg in {G2,G4,G6,G7}).
  int panel_offset(Group gg, int k) const {
    const int lead = (gg == G2 || gg == G7) ? R1_ : R2_;
    return goff_[gg] + lead + poff_[k];
  }

  Mat project_ED(const Mat& m) const { return detail::project_slots(m, slots_); }

  // R(K) = E[Ltilde K Ltilde], the operator-valued R-transform of the
  // fluctuation part over the block-diagonal subalgebra.
  Mat apply_R(const Mat& g) const {
    Mat r = Mat::Zero(n_, n_);
    const ChannelStats& st = *st_;
    const ThetaState& th = *theta_;

    // (G1,G1) and (G5,G5): sum_k eta_tilde_{k,i}(Theta G_data Theta^H) over panels
    // of groups 7 and 4.
    for (int k = 0; k < K_; ++k) {
      const int lk = st.L[k];
      const Vec t1 = th.panel(1, k);
      const Vec t2 = th.panel(2, k);
      r.block(goff_[G1], goff_[G1], R1_, R1_) += detail::corr_left(
          st.rlink(1, k + 1),
          detail::theta_conj(t1, g.block(panel_offset(G7, k), panel_offset(G7, k), lk, lk), false));
      r.block(goff_[G5], goff_[G5], R2_, R2_) += detail::corr_left(
          st.rlink(2, k + 1),
          detail::theta_conj(t2, g.block(panel_offset(G4, k), panel_offset(G4, k), lk, lk), false));
    }

    // (G7,G7) and (G4,G4): Theta^H eta_{k,i}(G1 / G5) Theta on panel blocks.
    const Mat g1 = g.block(goff_[G1], goff_[G1], R1_, R1_);
    const Mat g5 = g.block(goff_[G5], goff_[G5], R2_, R2_);
    for (int k = 0; k < K_; ++k) {
      const int lk = st.L[k];
      r.block(panel_offset(G7, k), panel_offset(G7, k), lk, lk) =
          detail::theta_conj(th.panel(1, k), detail::corr_right(st.rlink(1, k + 1), g1), true);
      r.block(panel_offset(G4, k), panel_offset(G4, k), lk, lk) =
          detail::theta_conj(th.panel(2, k), detail::corr_right(st.rlink(2, k + 1), g5), true);
    }

    // (G2,G2), (G6,G6), (G2,G6), (G6,G2): built from G3.
    const Mat g3 = g.block(goff_[G3], goff_[G3], T_, T_);
    r.block(goff_[G2], goff_[G2], R1_, R1_) = detail::corr_left(st.rlink(1, 0), g3);
    r.block(goff_[G6], goff_[G6], R2_, R2_) = detail::corr_left(st.rlink(2, 0), g3);
    if (use_zeta_) {
      for (int k = 0; k < K_; ++k) {
        const int lk = st.L[k];
        const Mat zt = detail::corr_left(st.f[k], g3);
        r.block(panel_offset(G2, k), panel_offset(G2, k), lk, lk) = zt;
        r.block(panel_offset(G6, k), panel_offset(G6, k), lk, lk) = zt;
        r.block(panel_offset(G2, k), panel_offset(G6, k), lk, lk) = -zt;
        r.block(panel_offset(G6, k), panel_offset(G2, k), lk, lk) = -zt;
      }
    }

    // (G3,G3): direct-link etas of the leading blocks of G2/G6 plus, with
    // random F, zetas of the panel blocks including the cross slots.
    Mat g33 = detail::corr_right(st.rlink(1, 0), g.block(goff_[G2], goff_[G2], R1_, R1_)) +
              detail::corr_right(st.rlink(2, 0), g.block(goff_[G6], goff_[G6], R2_, R2_));
    if (use_zeta_) {
      for (int k = 0; k < K_; ++k) {
        const int lk = st.L[k];
        const Mat arg = g.block(panel_offset(G2, k), panel_offset(G2, k), lk, lk) +
                        g.block(panel_offset(G6, k), panel_offset(G6, k), lk, lk) -
                        g.block(panel_offset(G2, k), panel_offset(G6, k), lk, lk) -
                        g.block(panel_offset(G6, k), panel_offset(G2, k), lk, lk);
        g33 += detail::corr_right(st.f[k], arg);
      }
    }
    r.block(goff_[G3], goff_[G3], T_, T_) = g33;
    return r;
  }

  // M(z) = Lambda(z) - R(G) - Lbar.
  Mat assemble_M(cxd z, const Mat& g) const {
    Mat m = -apply_R(g) - lbar_;
    m.block(goff_[G1], goff_[G1], R1_, R1_).diagonal().array() += z;
    return m;
  }

  Mat g_block(const Mat& g, Group a, Group b) const {
    return g.block(goff_[a], goff_[b], gsz_[a], gsz_[b]);
  }

 private:
  void build_slots() {
    auto full = [&](Group gg) { slots_.push_back({goff_[gg], goff_[gg], gsz_[gg], gsz_[gg]}); };
    auto stack_diag = [&](Group gg) {
      const int lead = (gg == G2 || gg == G7) ? R1_ : R2_;
      slots_.push_back({goff_[gg], goff_[gg], lead, lead});
      for (int k = 0; k < K_; ++k)
        slots_.push_back({panel_offset(gg, k), panel_offset(gg, k), st_->L[k], st_->L[k]});
    };
    full(G1);
    stack_diag(G2);
    full(G3);
    stack_diag(G4);
    full(G5);
    stack_diag(G6);
    stack_diag(G7);
    // Cross slots coupling the user-1 and user-2 F-stacks.
    slots_.push_back({goff_[G2], goff_[G6], R1_, R2_});
    slots_.push_back({goff_[G6], goff_[G2], R2_, R1_});
    for (int k = 0; k < K_; ++k) {
      slots_.push_back({panel_offset(G2, k), panel_offset(G6, k), st_->L[k], st_->L[k]});
      slots_.push_back({panel_offset(G6, k), panel_offset(G2, k), st_->L[k], st_->L[k]});
    }
  }

  Mat gbar(int user) const {
    const int ru = user == 1 ? R1_ : R2_;
    Mat g = Mat::Zero(ru, ru + Ltot_);
    g.leftCols(ru) = Mat::Identity(ru, ru);
    for (int k = 0; k < K_; ++k)
      g.block(0, ru + poff_[k], ru, st_->L[k]) =
          st_->rlink(user, k + 1).mean * theta_->panel(user, k).asDiagonal();
    return g;
  }

  Mat fbar(int user) const {
    const int ru = user == 1 ? R1_ : R2_;
    Mat f = Mat::Zero(ru + Ltot_, T_);
    f.topRows(ru) = st_->rlink(user, 0).mean;
    for (int k = 0; k < K_; ++k) f.block(ru + poff_[k], 0, st_->L[k], T_) = st_->f[k].mean;
    return f;
  }

  void build_lbar() {
    lbar_ = Mat::Zero(n_, n_);
    auto put = [&](Group a, Group b, const Mat& blk) {
      lbar_.block(goff_[a], goff_[b], gsz_[a], gsz_[b]) = blk;
      if (a != b) lbar_.block(goff_[b], goff_[a], gsz_[b], gsz_[a]) = blk.adjoint();
    };
    const Mat g1b = gbar(1), g2b = gbar(2), f1b = fbar(1), f2b = fbar(2);
    put(G1, G7, g1b);
    put(G2, G3, f1b);
    put(G2, G7, -Mat::Identity(gsz_[G2], gsz_[G2]));
    put(G3, G6, -f2b.adjoint());
    put(G4, G5, -g2b.adjoint());
    put(G4, G6, Mat::Identity(gsz_[G4], gsz_[G4]));
    put(G5, G5, Mat::Identity(R2_, R2_));
  }

  const ChannelStats* st_;
  const ThetaState* theta_;
  bool use_zeta_;
  int R1_, R2_, T_, K_, Ltot_, n_;
  int goff_[7], gsz_[7];
  std::vector<int> poff_;
  std::vector<Slot> slots_;
  Mat lbar_;
};

// Linearization of B_t = H1^H H1 + H2^H H2 (the power-normalization Gram):
// four block groups [T | m | R1+R2 | m] with m = R1 + R2 + 2L; the (1,1)
// resolvent corner at z -> 0 is -B_t^{-1}.
class Prop2Linearization {
 public:
  enum Group { H1 = 0, H2, H3, H4 };

  Prop2Linearization(const ChannelStats& st, const ThetaState& theta)
      : st_(&st), theta_(&theta), use_zeta_(!st.deterministic_F()) {
    R1_ = st.R1;
    R2_ = st.R2;
    T_ = st.T;
    K_ = st.K;
    Ltot_ = 0;
    for (int lk : st.L) Ltot_ += lk;
    m_ = R1_ + R2_ + 2 * Ltot_;
    const int sz[4] = {T_, m_, R1_ + R2_, m_};
    int off = 0;
    for (int gidx = 0; gidx < 4; ++gidx) {
      goff_[gidx] = off;
      gsz_[gidx] = sz[gidx];
      off += sz[gidx];
    }
    n_ = off;
    poff_.resize(K_);
    int p = 0;
    for (int k = 0; k < K_; ++k) {
      poff_[k] = p;
      p += st.L[k];
    }
    build_slots();
    build_lbar();
  }

  int n() const { return n_; }
  int group_offset(Group gg) const { return goff_[gg]; }
  int group_size(Group gg) const { return gsz_[gg]; }
  const Mat& lbar() const { return lbar_; }
  const std::vector<Slot>& slots() const { return slots_; }

  // Offsets inside the [R1 | panels | R2 | panels] stacks (groups H2/H4) and
  // the [R1 | R2] group H3.
  int stack_user_offset(Group gg, int user) const {
    return goff_[gg] + (user == 1 ? 0 : R1_ + Ltot_);
  }
  int stack_panel_offset(Group gg, int user, int k) const {
    return stack_user_offset(gg, user) + (user == 1 ? R1_ : R2_) + poff_[k];
  }
  int h3_user_offset(int user) const { return goff_[H3] + (user == 1 ? 0 : R1_); }

  Mat project_ED(const Mat& m) const { return detail::project_slots(m, slots_); }

  Mat apply_R(const Mat& g) const {
    Mat r = Mat::Zero(n_, n_);
    const ChannelStats& st = *st_;
    const ThetaState& th = *theta_;

    // (H1,H1): all four F-stack quadrants of the H4 block.
    Mat r11 = Mat::Zero(T_, T_);
    for (int u = 1; u <= 2; ++u)
      r11 += detail::corr_right(
          st.rlink(u, 0),
          g.block(stack_user_offset(H4, u), stack_user_offset(H4, u), ru(u), ru(u)));
    if (use_zeta_) {
      for (int k = 0; k < K_; ++k) {
        const int lk = st.L[k];
        Mat arg = Mat::Zero(lk, lk);
        for (int u = 1; u <= 2; ++u)
          for (int v = 1; v <= 2; ++v)
            arg += g.block(stack_panel_offset(H4, u, k), stack_panel_offset(H4, v, k), lk, lk);
        r11 += detail::corr_right(st.f[k], arg);
      }
    }
    r.block(goff_[H1], goff_[H1], T_, T_) = r11;

    // (H4,H4): direct blocks on the diagonal, zeta_tilde on every
    // same-panel slot across both halves.
    const Mat g11 = g.block(goff_[H1], goff_[H1], T_, T_);
    for (int u = 1; u <= 2; ++u)
      r.block(stack_user_offset(H4, u), stack_user_offset(H4, u), ru(u), ru(u)) =
          detail::corr_left(st.rlink(u, 0), g11);
    if (use_zeta_) {
      for (int k = 0; k < K_; ++k) {
        const int lk = st.L[k];
        const Mat zt = detail::corr_left(st.f[k], g11);
        for (int u = 1; u <= 2; ++u)
          for (int v = 1; v <= 2; ++v)
            r.block(stack_panel_offset(H4, u, k), stack_panel_offset(H4, v, k), lk, lk) = zt;
      }
    }

    // (H2,H2) panels and (H3,H3) user blocks.
    for (int u = 1; u <= 2; ++u) {
      const Mat g3u = g.block(h3_user_offset(u), h3_user_offset(u), ru(u), ru(u));
      Mat acc = Mat::Zero(ru(u), ru(u));
      for (int k = 0; k < K_; ++k) {
        const int lk = st.L[k];
        const Vec tu = th.panel(u, k);
        r.block(stack_panel_offset(H2, u, k), stack_panel_offset(H2, u, k), lk, lk) =
            detail::theta_conj(tu, detail::corr_right(st.rlink(u, k + 1), g3u), true);
        acc += detail::corr_left(
            st.rlink(u, k + 1),
            detail::theta_conj(
                tu, g.block(stack_panel_offset(H2, u, k), stack_panel_offset(H2, u, k), lk, lk),
                false));
      }
      r.block(h3_user_offset(u), h3_user_offset(u), ru(u), ru(u)) = acc;
    }
    return r;
  }

  Mat assemble_M(cxd z, const Mat& g) const {
    Mat m = -apply_R(g) - lbar_;
    m.block(goff_[H1], goff_[H1], T_, T_).diagonal().array() += z;
    return m;
  }

  Mat g_block(const Mat& g, Group a, Group b) const {
    return g.block(goff_[a], goff_[b], gsz_[a], gsz_[b]);
  }

 private:
  int ru(int user) const { return user == 1 ? R1_ : R2_; }

  void build_slots() {
    slots_.push_back({goff_[H1], goff_[H1], T_, T_});
    for (Group gg : {H2, H4}) {
      for (int u = 1; u <= 2; ++u)
        slots_.push_back({stack_user_offset(gg, u), stack_user_offset(gg, u), ru(u), ru(u)});
      for (int k = 0; k < K_; ++k)
        for (int u = 1; u <= 2; ++u)
          for (int v = 1; v <= 2; ++v)
            slots_.push_back({stack_panel_offset(gg, u, k), stack_panel_offset(gg, v, k),
                              st_->L[k], st_->L[k]});
    }
    for (int u = 1; u <= 2; ++u)
      slots_.push_back({h3_user_offset(u), h3_user_offset(u), ru(u), ru(u)});
  }

  Mat gbar(int user) const {
    const int r = ru(user);
    Mat g = Mat::Zero(r, r + Ltot_);
    g.leftCols(r) = Mat::Identity(r, r);
    for (int k = 0; k < K_; ++k)
      g.block(0, r + poff_[k], r, st_->L[k]) =
          st_->rlink(user, k + 1).mean * theta_->panel(user, k).asDiagonal();
    return g;
  }

  Mat fbar(int user) const {
    const int r = ru(user);
    Mat f = Mat::Zero(r + Ltot_, T_);
    f.topRows(r) = st_->rlink(user, 0).mean;
    for (int k = 0; k < K_; ++k) f.block(r + poff_[k], 0, st_->L[k], T_) = st_->f[k].mean;
    return f;
  }

  void build_lbar() {
    lbar_ = Mat::Zero(n_, n_);
    Mat fstack(m_, T_);
    fstack.topRows(R1_ + Ltot_) = fbar(1);
    fstack.bottomRows(R2_ + Ltot_) = fbar(2);
    Mat gdiag = Mat::Zero(R1_ + R2_, m_);
    gdiag.block(0, 0, R1_, R1_ + Ltot_) = gbar(1);
    gdiag.block(R1_, R1_ + Ltot_, R2_, R2_ + Ltot_) = gbar(2);

    lbar_.block(goff_[H1], goff_[H4], T_, m_) = fstack.adjoint();
    lbar_.block(goff_[H4], goff_[H1], m_, T_) = fstack;
    lbar_.block(goff_[H2], goff_[H3], m_, R1_ + R2_) = gdiag.adjoint();
    lbar_.block(goff_[H3], goff_[H2], R1_ + R2_, m_) = gdiag;
    lbar_.block(goff_[H2], goff_[H4], m_, m_) = -Mat::Identity(m_, m_);
    lbar_.block(goff_[H4], goff_[H2], m_, m_) = -Mat::Identity(m_, m_);
    lbar_.block(goff_[H3], goff_[H3], R1_ + R2_, R1_ + R2_) =
        -Mat::Identity(R1_ + R2_, R1_ + R2_);
  }

  const ChannelStats* st_;
  const ThetaState* theta_;
  bool use_zeta_;
  int R1_, R2_, T_, K_, Ltot_, m_, n_;
  int goff_[4], gsz_[4];
  std::vector<int> poff_;
  std::vector<Slot> slots_;
  Mat lbar_;
};

}  // namespace starnoma
