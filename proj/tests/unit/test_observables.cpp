#include <gtest/gtest.h>

#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "kbp/error.hpp"
#include "kbp/observables.hpp"

using namespace kbp;

namespace {

MatrixC random_psd(Eigen::Index n, Eigen::Index rank, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatrixC x(n, rank);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < rank; ++j) x(i, j) = Complex(g(rng), g(rng));
  return x * x.adjoint();
}

MatrixC random_unitary(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatrixC x(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) x(i, j) = Complex(g(rng), g(rng));
  Eigen::HouseholderQR<MatrixC> qr(x);
  return qr.householderQ();
}

MatrixC projector(const Eigen::VectorXcd& v) { return v * v.adjoint() / v.squaredNorm(); }

Eigen::VectorXcd singlet() {
  Eigen::VectorXcd s(4);
  s << 0.0, 1.0, -1.0, 0.0;
  return s / std::sqrt(2.0);
}

// Dense reference: sum of absolute negative eigenvalues of the full partial transpose.
double dense_negativity(const MatrixC& rho) {
  MatrixC pt(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int a2 = 0; a2 < 2; ++a2)
        for (int b2 = 0; b2 < 2; ++b2) pt(2 * a + b2, 2 * a2 + b) = rho(2 * a + b, 2 * a2 + b2);
  Eigen::ComplexEigenSolver<MatrixC> es(pt);
  double n = 0.0;
  for (int k = 0; k < 4; ++k) n += std::max(0.0, -es.eigenvalues()(k).real());
  return n;
}

}  // namespace

TEST(Heisenberg, Spectrum) {
  BondTerm h = heisenberg_term();
  Eigen::SelfAdjointEigenSolver<MatrixC> es(h.h);
  EXPECT_NEAR(es.eigenvalues()(0), -0.75, 1e-14);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(es.eigenvalues()(k), 0.25, 1e-14);
  EXPECT_NEAR(std::abs(h.h.trace()), 0.0, 1e-14);
  Eigen::VectorXcd s = singlet();
  EXPECT_NEAR((s.adjoint() * h.h * s)(0, 0).real(), -0.75, 1e-14);
}

TEST(BondEnergy, KnownStates) {
  BondTerm h = heisenberg_term();
  EXPECT_NEAR(bond_energy(make_density(projector(singlet()), {2, 2}), h), -0.75, 1e-14);
  EXPECT_NEAR(bond_energy(make_density(MatrixC::Identity(4, 4), {2, 2}), h), 0.0, 1e-14);
  Eigen::VectorXcd upup = Eigen::VectorXcd::Zero(4);
  upup(0) = 1.0;
  EXPECT_NEAR(bond_energy(make_density(projector(upup), {2, 2}), h), 0.25, 1e-14);
}

TEST(BondEnergy, LinearAndBasisInvariant) {
  std::mt19937_64 rng(1);
  BondTerm h = heisenberg_term();
  for (int trial = 0; trial < 20; ++trial) {
    DensityMatrix rho = make_density(random_psd(4, 4, rng), {2, 2});
    MatrixC u = random_unitary(4, rng);
    BondTerm h2 = h;
    h2.h = u * h.h * u.adjoint();
    DensityMatrix rho2 = make_density(u * rho.data * u.adjoint(), {2, 2});
    EXPECT_NEAR(bond_energy(rho, h), bond_energy(rho2, h2), 1e-10);
    BondTerm h3 = h;
    h3.h = 2.5 * h.h + h2.h;
    EXPECT_NEAR(bond_energy(rho, h3), 2.5 * bond_energy(rho, h) + bond_energy(rho, h2), 1e-10);
  }
}

TEST(Magnetization, PauliExpectations) {
  Eigen::VectorXcd plus(2);
  plus << 1.0, 1.0;
  auto m = magnetization(make_density(projector(plus), {2}));
  EXPECT_NEAR(m[0], 1.0, 1e-14);
  EXPECT_NEAR(m[1], 0.0, 1e-14);
  EXPECT_NEAR(m[2], 0.0, 1e-14);
  Eigen::VectorXcd down(2);
  down << 0.0, 1.0;
  EXPECT_NEAR(magnetization(make_density(projector(down), {2}))[2], -1.0, 1e-14);
}

TEST(PartialTrace, ProductFactorizes) {
  std::mt19937_64 rng(2);
  MatrixC a = random_psd(2, 2, rng), b = random_psd(3, 3, rng);
  DensityMatrix rho = make_density(Eigen::kroneckerProduct(a, b).eval(), {2, 3});
  DensityMatrix ra = partial_trace(rho, 0), rb = partial_trace(rho, 1);
  EXPECT_LT((ra.data - a / a.trace()).norm(), 1e-12);
  EXPECT_LT((rb.data - b / b.trace()).norm(), 1e-12);
}

TEST(Fidelity, Identities) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    DensityMatrix rho = make_density(random_psd(4, 4, rng), {2, 2});
    EXPECT_NEAR(fidelity(rho, rho), 1.0, 1e-10);
    DensityMatrix pure = make_density(random_psd(4, 1, rng), {2, 2});
    EXPECT_NEAR(fidelity(pure, pure), 1.0, 1e-10);
    DensityMatrix sigma = make_density(random_psd(4, 2, rng), {2, 2});
    EXPECT_NEAR(fidelity(rho, sigma), fidelity(sigma, rho), 1e-10);
    double f = fidelity(pure, sigma);
    // Pure-state formula <psi|sigma|psi>.
    EXPECT_NEAR(f, (pure.data * sigma.data).trace().real(), 1e-10);
  }
  Eigen::VectorXcd z(2), o(2);
  z << 1.0, 0.0;
  o << 0.0, 1.0;
  EXPECT_NEAR(fidelity(make_density(projector(z), {2}), make_density(projector(o), {2})), 0.0, 1e-10);
  EXPECT_NEAR(fidelity(make_density(projector(z), {2}), make_density(MatrixC::Identity(2, 2), {2})), 0.5, 1e-10);
}

TEST(Fidelity, RejectsNonPsd) {
  MatrixC m = MatrixC::Identity(2, 2);
  m(1, 1) = -0.5;
  DensityMatrix bad = make_density(m, {2});
  EXPECT_THROW(fidelity(bad, bad), NonPSDInput);
}

TEST(SqrtPsd, SquaresBack) {
  std::mt19937_64 rng(4);
  for (Eigen::Index rank : {4, 2, 1}) {
    MatrixC a = random_psd(4, rank, rng);
    MatrixC r = sqrt_psd(a).root;
    EXPECT_LT((r * r - a).norm() / a.norm(), 1e-10) << rank;
  }
}

TEST(Negativity, KnownValues) {
  Eigen::VectorXcd bell(4);
  bell << 1.0, 0.0, 0.0, 1.0;
  EXPECT_NEAR(negativity(make_density(projector(bell), {2, 2})), 0.5, 1e-10);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    MatrixC a = random_psd(2, 2, rng), b = random_psd(2, 2, rng);
    EXPECT_LE(negativity(make_density(Eigen::kroneckerProduct(a, b).eval(), {2, 2})), 1e-10);
  }
  for (double p : {0.0, 0.2, 1.0 / 3.0, 0.5, 0.8, 1.0}) {
    MatrixC w = p * projector(bell) + (1 - p) * MatrixC::Identity(4, 4) / 4.0;
    double expect = dense_negativity(w);
    EXPECT_NEAR(negativity(make_density(w, {2, 2})), expect, 1e-10) << p;
    EXPECT_NEAR(expect, std::max(0.0, (3 * p - 1) / 4), 1e-10);
  }
}

TEST(Negativity, TransposeSidesAgree) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    DensityMatrix rho = make_density(random_psd(4, 2, rng), {2, 2});
    auto spec = [](const MatrixC& m) {
      Eigen::SelfAdjointEigenSolver<MatrixC> es(m);
      return Eigen::VectorXd(es.eigenvalues());
    };
    EXPECT_LT((spec(partial_transpose(rho, 0)) - spec(partial_transpose(rho, 1))).norm(), 1e-10);
  }
}

TEST(RdmTwoSite, TrivialEnvironment) {
  auto ket = [](Complex a0, Complex a1) {
    Tensor t({"p", "b", "x"}, {2, 1, 1});
    t.at({0, 0, 0}) = a0;
    t.at({1, 0, 0}) = a1;
    return t;
  };
  EdgeTN e = identity_edge(ket(1.0, 0.0), ket(0.0, 1.0), "b", "b");
  DensityMatrix rho = rdm_two_site(e);
  MatrixC want = MatrixC::Zero(4, 4);
  want(1, 1) = 1.0;
  EXPECT_LT((rho.data - want).norm(), 1e-14);

  // Singlet split across a bond of dimension 2.
  Tensor a({"p", "b"}, {2, 2});
  a.at({0, 0}) = 1.0;
  a.at({1, 1}) = 1.0;
  Tensor c({"p", "b"}, {2, 2});
  c.at({1, 0}) = 1.0;
  c.at({0, 1}) = -1.0;
  DensityMatrix s = rdm_two_site(identity_edge(a, c, "b", "b"));
  EXPECT_NEAR(bond_energy(s, heisenberg_term()), -0.75, 1e-14);
  EXPECT_NEAR(fidelity(s, make_density(projector(singlet()), {2, 2})), 1.0, 1e-10);
}
