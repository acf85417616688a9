#include <cmath>

#include <gtest/gtest.h>

#include "sase/metrics.hpp"
#include "sase/subspace.hpp"

using namespace sase;

namespace {

ChannelInstance toy_channel(std::uint64_t seed, Index n_r = 6, Index n_t = 8, Index l = 2) {
  RngStream rng(seed);
  return assemble_channel(sample_paths(l, ArrayKind::ula, rng), ArrayGeometry::ula(n_r), ArrayGeometry::ula(n_t));
}

CMatrix random_unitary(RngStream& rng, Index n) { return orthonormal_basis(rng.complex_normal_matrix(n, n)); }

CMatrix random_frame(RngStream& rng, Index n, Index l) { return orthonormal_basis(rng.complex_normal_matrix(n, l)); }

// Orthonormal basis of the complement of span(q).
CMatrix complement(const CMatrix& q, Index width) {
  const CMatrix p = CMatrix::Identity(q.rows(), q.rows()) - q * q.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(p);
  return es.eigenvectors().rightCols(width);
}

}  // namespace

TEST(Eta, TrueFramesCaptureEverything) {
  const ChannelInstance ch = toy_channel(1);
  const CMatrix u = ch.left_frame(2), v = ch.right_frame(2);
  EXPECT_NEAR(eta(u, v, ch), 1.0, 1e-10);
  EXPECT_NEAR(eta_c(u, ch), 1.0, 1e-10);
  EXPECT_NEAR(eta_r(v, ch), 1.0, 1e-10);
}

TEST(Eta, ComplementsCaptureNothing) {
  const ChannelInstance ch = toy_channel(2);
  const CMatrix uc = complement(ch.left_frame(2), 2), vc = complement(ch.right_frame(2), 2);
  EXPECT_NEAR(eta(uc, vc, ch), 0.0, 1e-10);
  EXPECT_NEAR(eta_c(uc, ch), 0.0, 1e-10);
  EXPECT_NEAR(eta_r(vc, ch), 0.0, 1e-10);
}

TEST(Eta, RandomFramesMatchElementwiseSum) {
  const ChannelInstance ch = toy_channel(3);
  RngStream rng(4);
  const CMatrix w = random_frame(rng, 6, 2), f = random_frame(rng, 8, 2);
  double captured = 0.0, total = 0.0;
  for (Index a = 0; a < 2; ++a)
    for (Index b = 0; b < 2; ++b) {
      Complex s = 0.0;
      for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 8; ++j) s += std::conj(w(i, a)) * ch.matrix(i, j) * f(j, b);
      captured += std::norm(s);
    }
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 8; ++j) total += std::norm(ch.matrix(i, j));
  EXPECT_NEAR(eta(w, f, ch), captured / total, 1e-12);
}

TEST(Eta, RotationInvariance) {
  const ChannelInstance ch = toy_channel(5);
  RngStream rng(6);
  const CMatrix w = random_frame(rng, 6, 2), f = random_frame(rng, 8, 2);
  for (int k = 0; k < 10; ++k) {
    const CMatrix q1 = random_unitary(rng, 2), q2 = random_unitary(rng, 2);
    EXPECT_NEAR(eta_c(w * q1, ch), eta_c(w, ch), 1e-10);
    EXPECT_NEAR(eta_r(f * q2, ch), eta_r(f, ch), 1e-10);
    EXPECT_NEAR(eta(w * q1, f * q2, ch), eta(w, f, ch), 1e-10);
  }
}

TEST(Eta, IdentityColumnsGiveDiagonalEnergy) {
  const ChannelInstance ch = toy_channel(7);
  const CMatrix w = orthonormal_basis(CMatrix::Identity(6, 2));
  const double want = ch.matrix.topRows(2).squaredNorm() / ch.matrix.squaredNorm();
  EXPECT_NEAR(eta_c(w, ch), want, 1e-12);
  const CMatrix hh = ch.matrix * ch.matrix.adjoint();
  EXPECT_NEAR(eta_c(w, ch), (hh(0, 0) + hh(1, 1)).real() / hh.trace().real(), 1e-12);
}

TEST(Eta, ErrorsAndJointBelowMarginals) {
  const ChannelInstance ch = toy_channel(8);
  RngStream rng(9);
  EXPECT_THROW(eta_c(2.0 * random_frame(rng, 6, 2), ch), ContractViolation);
  EXPECT_THROW(eta(random_frame(rng, 6, 2), random_frame(rng, 8, 2), CMatrix::Zero(6, 8)), UndefinedMetric);
  for (int k = 0; k < 200; ++k) {
    const CMatrix w = random_frame(rng, 6, 2), f = random_frame(rng, 8, 2);
    const double e = eta(w, f, ch);
    EXPECT_LE(e, std::min(eta_c(w, ch), eta_r(f, ch)) + 1e-9);
    EXPECT_GE(e, 0.0);
  }
}

TEST(Nmse, Examples) {
  const ChannelInstance ch = toy_channel(10);
  EXPECT_EQ(nmse(ch.matrix, ch.matrix), 0.0);
  EXPECT_DOUBLE_EQ(nmse(ch.matrix, CMatrix::Zero(6, 8)), 1.0);
  RngStream rng(11);
  CMatrix e = rng.complex_normal_matrix(6, 8);
  e *= 0.1 * ch.matrix.norm() / e.norm();
  EXPECT_NEAR(nmse(ch.matrix, ch.matrix + e), 0.01, 1e-12);
  EXPECT_THROW(nmse(ch.matrix, CMatrix::Zero(6, 7)), ShapeError);
  EXPECT_THROW(nmse(CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)), UndefinedMetric);
}

TEST(Rate, ClosedFormExamples) {
  const CMatrix e1 = CMatrix::Identity(1, 1);
  EXPECT_NEAR(spectrum_efficiency(e1, e1, e1, 1.0, 1), 1.0, 1e-12);
  const CMatrix e2 = CMatrix::Identity(2, 2);
  EXPECT_NEAR(spectrum_efficiency(e2, e2, e2, 1.0, 2), 2.0 * std::log2(1.5), 1e-12);
  EXPECT_EQ(spectrum_efficiency(e2, e2, CMatrix::Zero(2, 2), 1.0, 2), 0.0);
  EXPECT_EQ(spectrum_efficiency(e2, e2, CMatrix::Zero(2, 2), 0.0, 2), 0.0);
  EXPECT_EQ(spectrum_efficiency(e2, e2, e2, 0.0, 2), kInf);
  EXPECT_THROW(spectrum_efficiency(2.0 * e2, e2, e2, 1.0, 2), ContractViolation);
  EXPECT_THROW(spectrum_efficiency(e2, e2, e2, -1.0, 2), InvalidParameter);
}

TEST(Rate, MatchesDeterminant) {
  const ChannelInstance ch = toy_channel(12, 6, 8, 3);
  RngStream rng(13);
  for (double sigma2 : {0.01, 0.5, 3.0}) {
    const CMatrix w = random_frame(rng, 6, 3), f = random_frame(rng, 8, 3);
    const CMatrix he = w.adjoint() * ch.matrix * f;
    const CMatrix a = CMatrix::Identity(3, 3) + he * he.adjoint() / (sigma2 * 3.0);
    const double want = std::log2(a.determinant().real());
    EXPECT_NEAR(spectrum_efficiency(w, f, ch.matrix, sigma2, 3), want, 1e-10);
    // Right rotations leave the rate unchanged.
    const CMatrix q = random_unitary(rng, 3);
    EXPECT_NEAR(spectrum_efficiency(w * q, f, ch.matrix, sigma2, 3), want, 1e-10);
  }
}

TEST(EffectiveSnr, Examples) {
  CMatrix h = CMatrix::Zero(4, 4);
  h.diagonal().setConstant(1.0);
  const CMatrix i4 = CMatrix::Identity(4, 4);
  EXPECT_NEAR(effective_snr(i4, i4, h, 1.0, 4), 1.0, 1e-12);
  EXPECT_NEAR(effective_snr(i4, i4, h, 2.0, 4), 0.5, 1e-12);
  EXPECT_EQ(effective_snr(i4, i4, h, 0.0, 4), kInf);
  const ChannelInstance ch = toy_channel(14);
  RngStream rng(15);
  const CMatrix w = random_frame(rng, 6, 2), f = random_frame(rng, 8, 2);
  EXPECT_NEAR(effective_snr(w * random_unitary(rng, 2), f * random_unitary(rng, 2), ch.matrix, 0.3, 2),
              effective_snr(w, f, ch.matrix, 0.3, 2), 1e-10);
}

TEST(Bounds, SubspaceFormulaExamples) {
  EXPECT_NEAR(subspace_accuracy_bound(0.01, 5.0, 36, 20), 1.0 - 72.0 * (0.25 + 0.002) / 625.0, 1e-14);
  EXPECT_NEAR(subspace_accuracy_bound(0.01, 5.0, 36, 20), 0.97097, 1e-5);
  EXPECT_EQ(subspace_accuracy_bound(0.0, 5.0, 36, 20), 1.0);
  EXPECT_EQ(subspace_accuracy_bound(1e6, 5.0, 36, 20), 0.0);
  EXPECT_THROW(subspace_accuracy_bound(0.1, 0.0, 36, 20), InvalidParameter);
}

TEST(Bounds, ColumnAndRowUseTheLthSingularValue) {
  // diag(9, 7, 5) padded: sigma_3 = 5.
  CMatrix h_s = CMatrix::Zero(36, 20);
  h_s(0, 0) = 9.0;
  h_s(1, 1) = 7.0;
  h_s(2, 2) = 5.0;
  EXPECT_NEAR(column_bound(0.01, h_s, 3, 36), 1.0 - 72.0 * (0.25 + 0.002) / 625.0, 1e-12);
  EXPECT_EQ(column_bound(0.0, h_s, 3, 36), 1.0);
  EXPECT_THROW(column_bound(0.01, h_s, 4, 36), InvalidParameter);

  CMatrix q = CMatrix::Zero(3, 144);
  q(0, 0) = 9.0;
  q(1, 1) = 7.0;
  q(2, 2) = 5.0;
  const double want = 1.0 - 2.0 * 144.0 * (0.01 * 25.0 + 3.0 * 1e-4) / 625.0;
  EXPECT_NEAR(row_bound(0.01, q, 3, 144), want, 1e-12);
  const double wider = 1.0 - 2.0 * 144.0 * (0.01 * 25.0 + 6.0 * 1e-4) / 625.0;
  EXPECT_NEAR(row_bound(0.01, q, 3, 144, 6), wider, 1e-12);
  EXPECT_EQ(row_bound(0.0, q, 3, 144), 1.0);
  EXPECT_EQ(row_bound(100.0, q, 3, 144), 0.0);
}

TEST(Bounds, JointBound) {
  const ChannelInstance ch = toy_channel(16);
  const CMatrix u = ch.left_frame(2), v = ch.right_frame(2);
  EXPECT_NEAR(joint_bound(u, u, v, v), 1.0, 1e-10);
  EXPECT_NEAR(joint_bound(complement(u, 2), u, v, v), 0.0, 1e-10);
  RngStream rng(17);
  for (int k = 0; k < 200; ++k) {
    const CMatrix w = random_frame(rng, 6, 2), f = random_frame(rng, 8, 2);
    EXPECT_LE(joint_bound(w, u, f, v), eta(w, f, ch) + 1e-9);
  }
}

TEST(ChannelUses, Formula) {
  EXPECT_EQ(sase_channel_uses(20, 36, 6, 144), 244);
  EXPECT_EQ(sase_channel_uses(4, 36, 6, 144), 164);
  EXPECT_EQ(sase_channel_uses(48, 36, 6, 144), 384);
  EXPECT_THROW(sase_channel_uses(20, 36, 5, 144), InvalidParameter);
  EXPECT_EQ(column_budget_for_uses(244, 36, 6, 144), 20);
  EXPECT_EQ(column_budget_for_uses(164, 36, 6, 144), 4);
  EXPECT_FALSE(column_budget_for_uses(245, 36, 6, 144).has_value());
  EXPECT_FALSE(column_budget_for_uses(100, 36, 6, 144).has_value());
  for (Index m = 0; m <= 144; ++m) EXPECT_EQ(column_budget_for_uses(sase_channel_uses(m, 36, 6, 144), 36, 6, 144), m);
}

TEST(BudgetTable, KnownRows) {
  const auto rows = budget_table(BudgetParams{});
  auto find = [&](const std::string& name) {
    for (const auto& r : rows)
      if (r.method == name) return r;
    ADD_FAILURE() << "missing row " << name;
    return BudgetRow{};
  };
  EXPECT_DOUBLE_EQ(find("SASE").channel_uses, 244.0);
  EXPECT_DOUBLE_EQ(find("Arnoldi").channel_uses, 192.0);
  EXPECT_NEAR(find("ACE").channel_uses, 256.0, 1e-9);
  EXPECT_TRUE(find("OMP").order_of_magnitude);
  EXPECT_FALSE(find("SASE").order_of_magnitude);
}
