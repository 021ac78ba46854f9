#pragma once

#include "starnoma/config.hpp"

namespace starnoma {

// GSVD of the pair (H1, H2): H_i = U_i Sigma_i V with shared nonsingular V,
// Sigma_i rectangular diagonal under the cosine-sine normalization
// Sigma1^H Sigma1 + Sigma2^H Sigma2 = I_T. mu holds the squared-GSV ratios of
// the S coupled pairs, sorted descending.
struct GsvdFactors {
  Mat U1, U2, V;
  RMat Sigma1, Sigma2;
  RVec mu;
  int S = 0;
  Regime regime = Regime::CoupledOnly;
  double cond_V = 0.0;

  Mat reconstruct(int user) const {
    const RMat& s = user == 1 ? Sigma1 : Sigma2;
    return (user == 1 ? U1 : U2) * s.cast<cxd>() * V;
  }
};

namespace detail {

// Completes the orthonormal columns in `partial` (may be fewer than rows)
// to a full unitary.
inline Mat complete_unitary(const Mat& partial, int rows) {
  const int have = static_cast<int>(partial.cols());
  if (have == rows) return partial;
  Mat q = Eigen::HouseholderQR<Mat>(partial).householderQ();
  Mat out(rows, rows);
  out.leftCols(have) = partial;
  int filled = have;
  for (int j = 0; j < rows && filled < rows; ++j) {
    Vec cand = q.col(j);
    cand -= out.leftCols(filled) * (out.leftCols(filled).adjoint() * cand);
    const double nrm = cand.norm();
    if (nrm > 1e-8) out.col(filled++) = cand / nrm;
  }
  if (filled != rows) throw DecompositionError("unitary completion failed");
  return out;
}

}  // namespace detail

inline GsvdFactors gsvd(const Mat& H1, const Mat& H2) {
  const int R1 = static_cast<int>(H1.rows());
  const int R2 = static_cast<int>(H2.rows());
  const int T = static_cast<int>(H1.cols());
  if (H2.cols() != T) throw ConfigError("gsvd: column counts differ");

  GsvdFactors g;
  g.S = std::min(R1, T) + std::min(R2, T) - std::min(R1 + R2, T);
  g.regime = T >= R1 + R2 ? Regime::OrthogonalOnly
                          : (T <= std::min(R1, R2) ? Regime::CoupledOnly : Regime::Mixed);

  if (g.regime == Regime::OrthogonalOnly) {
    // No coupled pairs: V rows are H1, an orthonormal basis of the joint
    // row-space complement, and H2; U_i = I.
    Mat stacked(R1 + R2, T);
    stacked.topRows(R1) = H1;
    stacked.bottomRows(R2) = H2;
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(stacked.adjoint());
    if (cod.rank() < R1 + R2)
      throw DecompositionError("gsvd: stacked matrix rank-deficient (rank " +
                               std::to_string(cod.rank()) + " < " + std::to_string(R1 + R2) + ")");
    Mat qfull = Eigen::HouseholderQR<Mat>(stacked.adjoint()).householderQ();
    Mat v(T, T);
    v.topRows(R1) = H1;
    v.block(R1, 0, T - R1 - R2, T) = qfull.rightCols(T - R1 - R2).adjoint();
    v.bottomRows(R2) = H2;
    g.U1 = Mat::Identity(R1, R1);
    g.U2 = Mat::Identity(R2, R2);
    g.V = std::move(v);
    g.Sigma1 = RMat::Zero(R1, T);
    g.Sigma1.leftCols(R1) = RMat::Identity(R1, R1);
    g.Sigma2 = RMat::Zero(R2, T);
    g.Sigma2.rightCols(R2) = RMat::Identity(R2, R2);
    g.mu = RVec();
  } else {
    Mat stacked(R1 + R2, T);
    stacked.topRows(R1) = H1;
    stacked.bottomRows(R2) = H2;
    Eigen::HouseholderQR<Mat> qr(stacked);
    Mat rfac = qr.matrixQR().topRows(T).triangularView<Eigen::Upper>();
    double rmin = 1e300, rmax = 0.0;
    for (int i = 0; i < T; ++i) {
      rmin = std::min(rmin, std::abs(rfac(i, i)));
      rmax = std::max(rmax, std::abs(rfac(i, i)));
    }
    if (rmin <= 1e-13 * std::max(1.0, rmax))
      throw DecompositionError("gsvd: stacked matrix rank-deficient (R pivot ratio " +
                               std::to_string(rmin / std::max(1e-300, rmax)) + ")");
    Mat q = qr.householderQ() * Mat::Identity(R1 + R2, T);
    const Mat q1 = q.topRows(R1);
    const Mat q2 = q.bottomRows(R2);

    // CS decomposition through the SVD of Q2. Counts per block are fixed by
    // the dimensions: n_one directions exclusive to user 2, S coupled,
    // n_zero exclusive to user 1.
    const int n_one = std::max(0, T - R1);
    const int n_zero = std::max(0, T - R2);
    Eigen::JacobiSVD<Mat> svd(q2, Eigen::ComputeFullU | Eigen::ComputeFullV);
    RVec s = RVec::Zero(T);
    s.head(svd.singularValues().size()) = svd.singularValues();
    Mat z = svd.matrixV();

    // Column order: [user-2 exclusive | coupled, sine ascending | user-1 exclusive].
    std::vector<int> order(T);
    for (int j = 0; j < n_one; ++j) order[j] = j;
    for (int j = 0; j < g.S; ++j) order[n_one + j] = n_one + (g.S - 1 - j);
    for (int j = 0; j < n_zero; ++j) order[n_one + g.S + j] = n_one + g.S + j;

    RVec sperm(T);
    Mat zperm(T, T);
    for (int j = 0; j < T; ++j) {
      sperm(j) = s(order[j]);
      zperm.col(j) = z.col(order[j]);
    }

    // U2 columns follow the SVD's left vectors of the retained columns.
    Mat u2cols(R2, n_one + g.S);
    for (int j = 0; j < n_one + g.S; ++j) u2cols.col(j) = svd.matrixU().col(order[j]);
    g.U2 = detail::complete_unitary(u2cols, R2);

    // Q1 Z has orthogonal columns with norms c; taking c from the column norm
    // rather than sqrt(1-s^2) keeps full precision for s near 1.
    const Mat q1z = q1 * zperm;
    RVec cperm = RVec::Zero(T);
    Mat u1cols(R1, g.S + n_zero);
    for (int j = 0; j < g.S + n_zero; ++j) {
      const int col = n_one + j;
      cperm(col) = q1z.col(col).norm();
      u1cols.col(j) = q1z.col(col) / cperm(col);
    }
    g.U1 = detail::complete_unitary(u1cols, R1);

    g.Sigma1 = RMat::Zero(R1, T);
    for (int j = 0; j < g.S + n_zero; ++j) g.Sigma1(j, n_one + j) = cperm(n_one + j);
    g.Sigma2 = RMat::Zero(R2, T);
    for (int j = 0; j < n_one + g.S; ++j) g.Sigma2(j, j) = sperm(j);

    g.V = zperm.adjoint() * rfac;
    g.mu.resize(g.S);
    for (int j = 0; j < g.S; ++j) {
      const int col = n_one + j;
      g.mu(j) = (cperm(col) * cperm(col)) / (sperm(col) * sperm(col));
    }
  }

  Eigen::JacobiSVD<Mat> vsvd(g.V);
  g.cond_V = vsvd.singularValues()(0) / vsvd.singularValues().tail(1)(0);
  return g;
}

// [H2; Delta * [I 0]]: the T-R2 appended rows make H2^H H2 invertible.
inline Mat augment_h2(const Mat& H2, double delta) {
  const int R2 = static_cast<int>(H2.rows());
  const int T = static_cast<int>(H2.cols());
  if (!(R2 < T))
    throw ContractViolation("augment_h2: requires R2 < T");
  const int extra = T - R2;
  Mat out = Mat::Zero(T, T);
  out.topRows(R2) = H2;
  for (int j = 0; j < extra; ++j) out(R2 + j, j) = delta;
  return out;
}

// Test oracle: B = H1 (H2^H H2)^{-1} H1^H, whose nonzero eigenvalues are the
// squared-GSV ratios. Pass the augmented H2 for the mixed regime.
inline Mat b_matrix(const Mat& H1, const Mat& H2) {
  const Mat gram = H2.adjoint() * H2;
  Eigen::PartialPivLU<Mat> lu(gram);
  const Mat inv = lu.inverse();
  const double defect = (gram * inv - Mat::Identity(gram.rows(), gram.cols())).norm();
  if (!std::isfinite(defect) || defect > 1e-6 * gram.rows())
    throw SingularityError("b_matrix: H2^H H2 numerically singular");
  Mat b = H1 * inv * H1.adjoint();
  return 0.5 * (b + Mat(b.adjoint()));
}

inline Mat b_matrix(const Mat& H1, const Mat& H2, Regime regime, double delta = 1e-4) {
  if (regime == Regime::OrthogonalOnly)
    throw ContractViolation("b_matrix: undefined for T >= R1+R2");
  return regime == Regime::Mixed ? b_matrix(H1, augment_h2(H2, delta)) : b_matrix(H1, H2);
}

// t = Tr((H1^H H1 + H2^H H2)^{-1}) = Tr(W W^H) for the GSVD precoder W = V^{-1}.
inline double power_factor_exact(const Mat& H1, const Mat& H2) {
  const int T = static_cast<int>(H1.cols());
  Mat gram = H1.adjoint() * H1 + H2.adjoint() * H2;
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success)
    throw SingularityError("power_factor_exact: Gram sum not positive definite");
  const Mat inv = llt.solve(Mat::Identity(T, T));
  return inv.real().trace();
}

// t from the factorization itself; the only route when T >= R1+R2.
inline double power_factor_from_v(const GsvdFactors& g) {
  const int T = static_cast<int>(g.V.rows());
  return g.V.partialPivLu().solve(Mat::Identity(T, T)).squaredNorm();
}

}  // namespace starnoma
