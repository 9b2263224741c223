#include "kbp/observables.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "kbp/error.hpp"

namespace kbp {

namespace {

MatrixC hermitian_part(const MatrixC& m) { return 0.5 * (m + m.adjoint()); }

Eigen::VectorXd eigenvalues(const MatrixC& h) {
  Eigen::SelfAdjointEigenSolver<MatrixC> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

std::size_t total_dim(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void require_bipartite(const DensityMatrix& rho) {
  if (rho.dims.size() != 2) throw ShapeMismatch("density matrix is not bipartite");
  if (static_cast<std::size_t>(rho.data.rows()) != total_dim(rho.dims)) throw ShapeMismatch("dims do not match matrix size");
}

}  // namespace

DensityMatrix make_density(const MatrixC& m, std::vector<std::size_t> dims) {
  const auto n = static_cast<Eigen::Index>(total_dim(dims));
  if (m.rows() != n || m.cols() != n) throw ShapeMismatch("density matrix size does not match dims");
  DensityMatrix rho;
  rho.dims = std::move(dims);
  rho.data = hermitian_part(m);
  Complex tr = rho.data.trace();
  if (std::abs(tr) == 0.0 || !std::isfinite(std::abs(tr))) throw NonPSDInput("density matrix has zero trace");
  rho.data /= tr.real();
  rho.normalized = true;
  rho.min_eigenvalue = eigenvalues(rho.data).minCoeff();
  return rho;
}

DensityMatrix rdm_two_site(const EdgeTN& edge) {
  if (edge.ring_legs.empty() && edge.ring.length() != 0) throw ShapeMismatch("edge ring has no legs");
  Tensor t = contract_exact(edge_network(edge, true));
  // The overall scale drops out after normalization.
  t = t.permuted({"i:p", "j:p", "i:p*", "j:p*"});
  t.set_scale_exp(0);
  return make_density(t.matrix({"i:p", "j:p"}), {edge.ket_i.dim("p"), edge.ket_j.dim("p")});
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::size_t keep) {
  require_bipartite(rho);
  const auto da = static_cast<Eigen::Index>(rho.dims[0]);
  const auto db = static_cast<Eigen::Index>(rho.dims[1]);
  MatrixC out = MatrixC::Zero(keep == 0 ? da : db, keep == 0 ? da : db);
  for (Eigen::Index a = 0; a < da; ++a)
    for (Eigen::Index b = 0; b < db; ++b)
      for (Eigen::Index a2 = 0; a2 < da; ++a2)
        for (Eigen::Index b2 = 0; b2 < db; ++b2) {
          Complex v = rho.data(a * db + b, a2 * db + b2);
          if (keep == 0 && b == b2) out(a, a2) += v;
          if (keep == 1 && a == a2) out(b, b2) += v;
        }
  return make_density(out, {keep == 0 ? rho.dims[0] : rho.dims[1]});
}

MatrixC partial_transpose(const DensityMatrix& rho, std::size_t which) {
  require_bipartite(rho);
  const auto da = static_cast<Eigen::Index>(rho.dims[0]);
  const auto db = static_cast<Eigen::Index>(rho.dims[1]);
  MatrixC out(da * db, da * db);
  for (Eigen::Index a = 0; a < da; ++a)
    for (Eigen::Index b = 0; b < db; ++b)
      for (Eigen::Index a2 = 0; a2 < da; ++a2)
        for (Eigen::Index b2 = 0; b2 < db; ++b2) {
          Complex v = rho.data(a * db + b, a2 * db + b2);
          if (which == 0) {
            out(a2 * db + b, a * db + b2) = v;
          } else {
            out(a * db + b2, a2 * db + b) = v;
          }
        }
  return out;
}

double bond_energy(const DensityMatrix& rho, const BondTerm& term) {
  check_term(term);
  if (rho.data.rows() != term.h.rows()) throw ShapeMismatch("bond term and density matrix sizes differ");
  Complex e = (rho.data * term.h).trace();
  if (std::abs(e.imag()) > 1e-8) throw InvariantViolation("energy has imaginary part " + std::to_string(e.imag()));
  return e.real();
}

std::array<double, 3> magnetization(const DensityMatrix& rho1) {
  if (rho1.data.rows() != 2) throw ShapeMismatch("magnetization needs a single qubit density matrix");
  std::array<double, 3> m{};
  for (int a = 0; a < 3; ++a) m[a] = (rho1.data * pauli(a)).trace().real();
  return m;
}

SqrtResult sqrt_psd(const MatrixC& m) {
  MatrixC h = hermitian_part(m);
  Eigen::SelfAdjointEigenSolver<MatrixC> es(h);
  const Eigen::VectorXd& w = es.eigenvalues();
  const double top = std::max(w.cwiseAbs().maxCoeff(), 1e-300);
  SqrtResult r;
  // Well-conditioned input: Schur-based principal root.
  if (w.minCoeff() > 1e-12 * top) {
    r.root = h.sqrt();
    if (r.root.allFinite() && (r.root * r.root - h).norm() <= 1e-10 * h.norm()) {
      r.root = hermitian_part(r.root);
      return r;
    }
  }
  const double floor = static_cast<double>(h.rows()) * 1e-15 * top;
  Eigen::VectorXd s(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    if (w(k) < 0.0) r.clipped = std::max(r.clipped, -w(k));
    s(k) = w(k) > floor ? std::sqrt(w(k)) : 0.0;
  }
  r.root = es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
  return r;
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.data.rows() != sigma.data.rows()) throw ShapeMismatch("fidelity of matrices with different sizes");
  for (const DensityMatrix* x : {&rho, &sigma}) {
    double lo = eigenvalues(hermitian_part(x->data)).minCoeff();
    if (lo < -kPsdTolerance) throw NonPSDInput("eigenvalue " + std::to_string(lo));
  }
  MatrixC s = sqrt_psd(rho.data).root;
  MatrixC inner = s * sigma.data * s;
  double f = sqrt_psd(inner).root.trace().real();
  f *= f;
  if (f > 1.0 + 1e-8) throw InvariantViolation("fidelity " + std::to_string(f) + " exceeds 1");
  return std::clamp(f, 0.0, 1.0);
}

double negativity(const DensityMatrix& rho) {
  double n[2];
  for (std::size_t which : {0u, 1u}) {
    Eigen::VectorXd w = eigenvalues(hermitian_part(partial_transpose(rho, which)));
    double neg = 0.0;
    for (Eigen::Index k = 0; k < w.size(); ++k) neg += w(k) < 0.0 ? -w(k) : 0.0;
    n[which] = neg / rho.data.trace().real();
  }
  if (std::abs(n[0] - n[1]) > 1e-10) throw InvariantViolation("partial transposes disagree");
  return n[1];
}

}  // namespace kbp
