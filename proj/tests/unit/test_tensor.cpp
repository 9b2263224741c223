#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "kbp/error.hpp"
#include "kbp/tensor.hpp"

using namespace kbp;
using kbp::testing::brute_contract;
using kbp::testing::relative_difference;

TEST(ScaledScalar, MantissaWindow) {
  auto s = ScaledScalar::from(Complex(-12345.0, 0.0));
  EXPECT_EQ(s.exponent, 4);
  EXPECT_NEAR(s.mantissa.real(), -1.2345, 1e-12);
  auto z = ScaledScalar::from(0.0, 7);
  EXPECT_TRUE(z.is_zero());
  EXPECT_EQ(z.exponent, 0);
  auto p = ScaledScalar::from(5.0, 300) * ScaledScalar::from(4.0, 300);
  EXPECT_EQ(p.exponent, 601);
  EXPECT_NEAR(p.mantissa.real(), 2.0, 1e-12);
  auto q = ScaledScalar::from(9.0, 0) + ScaledScalar::from(1.0, 0);
  EXPECT_EQ(q.exponent, 1);
  EXPECT_NEAR(std::abs(q.mantissa), 1.0, 1e-12);
}

TEST(Contract, IdentityLeavesVectorUnchanged) {
  Tensor id = Tensor::identity("i", "j", 2);
  Tensor b({"j"}, {2}, {Complex(1.5, -0.5), Complex(-2.0, 3.0)});
  Tensor r = contract(id, {"j"}, b, {"j"});
  ASSERT_EQ(r.legs(), std::vector<LegId>{"i"});
  EXPECT_LT(relative_difference(r.renamed("i", "j"), b), 1e-15);
}

TEST(Contract, MatchesBruteForceMatrixProduct) {
  std::mt19937_64 rng(11);
  Tensor a = Tensor::random({"i", "j"}, {2, 3}, rng);
  Tensor b = Tensor::random({"j", "k"}, {3, 4}, rng);
  EXPECT_LT(relative_difference(contract(a, {"j"}, b, {"j"}), brute_contract(a, {"j"}, b, {"j"})), 1e-12);
}

TEST(Contract, FullContractionWithConjugateIsSquaredNorm) {
  std::mt19937_64 rng(5);
  Tensor a = Tensor::random({"i", "j"}, {3, 4}, rng);
  Tensor s = contract(a, {"i", "j"}, a.conj(), {"i", "j"});
  EXPECT_NEAR(s.to_scalar().value().real(), a.norm() * a.norm(), 1e-12 * a.norm() * a.norm());
  EXPECT_NEAR(s.to_scalar().value().imag(), 0.0, 1e-12);
}

TEST(Contract, RandomInstancesMatchBruteForce) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  std::uniform_int_distribution<int> count(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const int shared = 1 + count(rng) % 2;
    std::vector<std::pair<LegId, std::size_t>> legs_a, legs_b;
    std::vector<LegId> ca, cb;
    for (int s = 0; s < shared; ++s) {
      std::size_t d = dim(rng);
      legs_a.push_back({"s" + std::to_string(s), d});
      legs_b.push_back({"t" + std::to_string(s), d});
      ca.push_back("s" + std::to_string(s));
      cb.push_back("t" + std::to_string(s));
    }
    for (int f = count(rng); f > 0; --f) legs_a.push_back({"a" + std::to_string(f), dim(rng)});
    for (int f = count(rng); f > 0; --f) legs_b.push_back({"b" + std::to_string(f), dim(rng)});
    std::shuffle(legs_a.begin(), legs_a.end(), rng);
    std::shuffle(legs_b.begin(), legs_b.end(), rng);
    auto make = [&](const std::vector<std::pair<LegId, std::size_t>>& spec) {
      std::vector<LegId> l;
      std::vector<std::size_t> d;
      for (const auto& [n, x] : spec) {
        l.push_back(n);
        d.push_back(x);
      }
      return Tensor::random(l, d, rng);
    };
    Tensor a = make(legs_a);
    Tensor b = make(legs_b);
    ASSERT_LT(relative_difference(contract(a, ca, b, cb), brute_contract(a, ca, b, cb)), 1e-12) << "trial " << trial;
  }
}

TEST(Contract, Bilinear) {
  std::mt19937_64 rng(3);
  Tensor a = Tensor::random({"i", "j"}, {3, 3}, rng);
  Tensor b = Tensor::random({"j", "k"}, {3, 2}, rng);
  Complex alpha(2.5e7, -1.0e6);
  Tensor lhs = contract(a.scaled(alpha), {"j"}, b, {"j"});
  Tensor rhs = contract(a, {"j"}, b, {"j"}).scaled(alpha);
  EXPECT_LT(relative_difference(lhs, rhs), 1e-13);
}

TEST(Contract, Errors) {
  Tensor a({"i", "j"}, {2, 3});
  Tensor b({"j", "i"}, {2, 2});
  EXPECT_THROW(contract(a, {"j"}, b, {"j"}), DimensionMismatch);
  EXPECT_THROW(contract(a, {"x"}, b, {"j"}), UnknownLeg);
  Tensor c({"k", "i"}, {3, 2});
  EXPECT_THROW(contract(a, {"j"}, c, {"k"}), NameCollision);
}

TEST(Contract, ResultIsRenormalized) {
  Tensor a({"i"}, {2}, {Complex(1e6), Complex(2e6)});
  Tensor b({"i"}, {2}, {Complex(1e6), Complex(1e6)});
  Tensor r = contract(a, {"i"}, b, {"i"});
  EXPECT_LE(r.max_abs(), 1e3);
  EXPECT_GE(r.max_abs(), 1e-3);
  EXPECT_NEAR(r.to_scalar().value().real(), 3e12, 1e-3);
}

TEST(FuseLegs, RoundTripIsBitIdentical) {
  std::mt19937_64 rng(1);
  Tensor t = Tensor::random({"a", "b", "c"}, {2, 3, 4}, rng);
  Tensor f = fuse_legs(t, {"a", "b"}, "ab");
  EXPECT_EQ(f.dim("ab"), 6u);
  Tensor s = split_leg(f, "ab", {"a", "b"}, {2, 3});
  ASSERT_EQ(s.legs(), t.legs());
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(s.data()[i], t.data()[i]);
}

TEST(FuseLegs, SingletonGroupOnlyRenames) {
  std::mt19937_64 rng(2);
  Tensor t = Tensor::random({"a", "b"}, {2, 3}, rng);
  Tensor f = fuse_legs(t, {"b"}, "z");
  EXPECT_EQ(f.legs(), (std::vector<LegId>{"a", "z"}));
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(f.data()[i], t.data()[i]);
}

TEST(FuseLegs, KetBraPairBecomesSquaredLeg) {
  std::mt19937_64 rng(4);
  Tensor ket = Tensor::random({"p", "v"}, {2, 3}, rng);
  Tensor bk = contract(ket, {"p"}, ket.conj().renamed("v", "v*"), {"p"});
  Tensor f = fuse_legs(bk, {"v", "v*"}, "V");
  EXPECT_EQ(f.dim("V"), 9u);
  // Entry (i, j) sits at i*3 + j (ket-major).
  EXPECT_LT(std::abs(f.at({1 * 3 + 2}) - bk.at({1, 2})), 1e-15);
}

TEST(SvdSplit, RankOneHasNoTruncation) {
  Tensor u({"i"}, {3}, {Complex(1.0), Complex(0.0), Complex(0.0)});
  Tensor v({"j"}, {2}, {Complex(0.0), Complex(1.0)});
  Tensor t = contract(u, {}, v, {});
  Decomposition d = svd_split(t, {"i"}, 1, "k");
  EXPECT_LE(d.truncation_error, 1e-14);
  EXPECT_EQ(d.singular_values.size(), 1u);
}

TEST(SvdSplit, DiagonalTruncationError) {
  Tensor t({"i", "j"}, {3, 3});
  t.at({0, 0}) = 3.0;
  t.at({1, 1}) = 2.0;
  t.at({2, 2}) = 1.0;
  Decomposition d = svd_split(t, {"i"}, 2, "k");
  EXPECT_NEAR(d.truncation_error, 1.0, 1e-12);
  EXPECT_NEAR(d.singular_values[0], 3.0, 1e-12);
  EXPECT_NEAR(d.singular_values[1], 2.0, 1e-12);
}

TEST(SvdSplit, ReconstructsRandomTensor) {
  std::mt19937_64 rng(9);
  Tensor t = Tensor::random({"a", "b", "c"}, {4, 4, 4}, rng);
  Decomposition d = svd_split(t, {"a", "c"}, kUnlimited, "k");
  Tensor r = contract(d.left_times_s(), {"k"}, d.right, {"k"});
  EXPECT_LT(relative_difference(r, t), 1e-12);
  for (std::size_t i = 1; i < d.singular_values.size(); ++i) {
    EXPECT_GE(d.singular_values[i - 1], d.singular_values[i]);
  }
}

TEST(SvdSplit, TruncationErrorBoundsReconstructionAndDecreasesWithChi) {
  std::mt19937_64 rng(10);
  Tensor t = Tensor::random({"a", "b", "c"}, {3, 4, 5}, rng);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t chi = 1; chi <= 12; ++chi) {
    Decomposition d = svd_split(t, {"a", "b"}, chi, "k");
    Tensor r = contract(d.left_times_s(), {"k"}, d.right, {"k"});
    Tensor diff = r.with_scale_folded();
    Tensor tp = t.permuted(diff.legs());
    double err = 0.0;
    for (std::size_t i = 0; i < tp.size(); ++i) err += std::norm(diff.data()[i] - tp.data()[i]);
    EXPECT_LE(std::sqrt(err), d.truncation_error + 1e-12);
    EXPECT_LE(d.truncation_error, previous + 1e-15);
    previous = d.truncation_error;
  }
}

TEST(SvdSplit, RejectsNonFinite) {
  Tensor t({"i", "j"}, {2, 2});
  t.at({0, 1}) = Complex(std::nan(""), 0.0);
  EXPECT_THROW(svd_split(t, {"i"}, 2, "k"), DecompositionFailure);
}

TEST(QrSplit, OrthogonalInputGivesUnitDiagonal) {
  double c = std::cos(0.3), s = std::sin(0.3);
  Tensor t({"i", "j"}, {2, 2}, {Complex(c), Complex(-s), Complex(s), Complex(c)});
  auto [q, r] = qr_split(t, {"i"}, QrSide::Left, "k");
  MatrixC rm = r.with_scale_folded().matrix({"k"});
  EXPECT_NEAR(std::abs(rm(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(rm(1, 1)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(rm(0, 1)), 0.0, 1e-12);
  EXPECT_GE(rm(0, 0).real(), 0.0);
  EXPECT_NEAR(rm(0, 0).imag(), 0.0, 1e-14);
}

TEST(QrSplit, IsometryAndReconstruction) {
  std::mt19937_64 rng(12);
  Tensor t = Tensor::random({"a", "b", "c"}, {2, 2, 4}, rng);
  auto [q, r] = qr_split(t, {"a", "b"}, QrSide::Left, "k");
  MatrixC qm = q.matrix({"a", "b"});
  EXPECT_LT((qm.adjoint() * qm - MatrixC::Identity(qm.cols(), qm.cols())).norm(), 1e-12);
  EXPECT_LT(relative_difference(contract(q, {"k"}, r, {"k"}), t), 1e-12);

  auto [l, q2] = qr_split(t, {"a"}, QrSide::Right, "k");
  MatrixC q2m = q2.matrix({"k"});
  EXPECT_LT((q2m * q2m.adjoint() - MatrixC::Identity(q2m.rows(), q2m.rows())).norm(), 1e-12);
  EXPECT_LT(relative_difference(contract(l, {"k"}, q2, {"k"}), t), 1e-12);
}

TEST(QrSplit, TriangularInputIsReproducedUpToPhases) {
  Tensor t({"i", "j"}, {2, 2}, {Complex(2.0), Complex(1.0, 1.0), Complex(0.0), Complex(3.0)});
  auto [q, r] = qr_split(t, {"i"}, QrSide::Left, "k");
  MatrixC rm = r.with_scale_folded().matrix({"k"});
  MatrixC tm = t.matrix({"i"});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(rm(i, j)), std::abs(tm(i, j)), 1e-12);
}

TEST(Renormalize, DecadeShiftZeroAndIdempotence) {
  Tensor t({"i"}, {2}, {Complex(1e8), Complex(-3e7)});
  Tensor r = renormalize(t);
  EXPECT_EQ(r.scale_exp(), 8);
  EXPECT_LE(r.max_abs(), 1e3);
  Tensor rr = renormalize(r);
  EXPECT_EQ(rr.scale_exp(), r.scale_exp());
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(rr.data()[i], r.data()[i]);
  Tensor z({"i"}, {3});
  Tensor zr = renormalize(z);
  EXPECT_EQ(zr.scale_exp(), 0);
  EXPECT_EQ(zr.max_abs(), 0.0);
}

TEST(Renormalize, WindowIsConfigurable) {
  Tensor t({"i"}, {1}, {Complex(50.0)});
  EXPECT_EQ(renormalize(t).scale_exp(), 0);
  EXPECT_EQ(renormalize(t, MantissaWindow{0, 1}).scale_exp(), 1);
}
