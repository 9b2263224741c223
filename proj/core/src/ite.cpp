#include "kbp/ite.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "kbp/error.hpp"

namespace kbp {

// ---------------------------------------------------------------------------------------------
// Gates and schedules

Tensor build_gate(const BondTerm& term, double dt) {
  check_term(term);
  if (!(dt >= 0.0)) throw ShapeMismatch("gate time step must be non-negative");
  Eigen::SelfAdjointEigenSolver<MatrixC> es(0.5 * (term.h + term.h.adjoint()));
  Eigen::VectorXd w = (-dt * es.eigenvalues().array()).exp();
  MatrixC g = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
  g = 0.5 * (g + g.adjoint());
  const std::size_t d = term.d;
  return Tensor::from_matrix(g, {"i_out", "j_out", "i_in", "j_in"}, {d, d, d, d});
}

MatrixC gate_matrix(const Tensor& gate) {
  return gate.permuted({"i_out", "j_out", "i_in", "j_in"}).matrix({"i_out", "j_out"});
}

Tensor swap_gate_sites(const Tensor& gate) {
  return gate.renamed({{"i_out", "j_out"}, {"j_out", "i_out"}, {"i_in", "j_in"}, {"j_in", "i_in"}})
      .permuted({"i_out", "j_out", "i_in", "j_in"});
}

TrotterSchedule trotter_schedule(const std::vector<TermGroup>& groups, double dt) {
  return trotter_schedule(groups, std::vector<double>{dt});
}

TrotterSchedule trotter_schedule(const std::vector<TermGroup>& groups, std::vector<double> dt_list) {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::set<std::string> seen;
    for (const auto& t : groups[g]) {
      check_term(t.term);
      for (const auto& s : t.sites) {
        if (groups[g].size() > 1 && s.empty()) {
          throw NonCommutingWithinGroup("term '" + t.term.edge + "' has no site labels");
        }
        if (!s.empty() && !seen.insert(s).second) {
          throw NonCommutingWithinGroup("site " + s + " is shared within group " + std::to_string(g));
        }
      }
    }
  }
  for (double dt : dt_list) {
    if (!(dt >= 0.0)) throw ShapeMismatch("time steps must be non-negative");
  }
  TrotterSchedule s;
  s.dt_list = std::move(dt_list);
  const std::size_t K = groups.size();
  auto emit = [&](std::size_t g, double frac) {
    for (const auto& t : groups[g]) s.applications.push_back({t.term.edge, frac, g});
  };
  for (std::size_t g = 0; g + 1 < K; ++g) emit(g, 0.5);
  if (K > 0) emit(K - 1, 1.0);
  for (std::size_t g = K - 1; g-- > 0;) emit(g, 0.5);
  return s;
}

std::vector<double> default_dt_schedule() {
  std::vector<double> dts;
  dts.insert(dts.end(), 100, 0.1);
  dts.insert(dts.end(), 100, 0.05);
  dts.insert(dts.end(), 200, 0.01);
  dts.insert(dts.end(), 200, 0.001);
  return dts;
}

std::vector<TermGroup> kagome_groups(const BondTerm& prototype) {
  const Lattice lat = kagome_lattice();
  auto label = [&](int role, Cell c) {
    return lat.roles[static_cast<std::size_t>(role)] + "@" + std::to_string(c[0]) + "," + std::to_string(c[1]);
  };
  std::vector<TermGroup> groups;
  for (const auto& name : kagome_bonds()) {
    const LatticeBond& b = lat.bonds[lat.bond_index(name)];
    SupportedTerm t{prototype, {label(b.role_a, {0, 0}), label(b.role_b, b.offset)}};
    t.term.edge = name;
    groups.push_back({t});
  }
  return groups;
}

// ---------------------------------------------------------------------------------------------
// ALS

void ALSConfig::validate() const {
  if (D < 1) throw ConfigError("D must be at least 1");
  if (max_sweeps < 1) throw ConfigError("max_sweeps must be at least 1");
  if (!(phi_tolerance > 0.0)) throw ConfigError("phi_tolerance must be positive");
  if (!(tikhonov > 0.0)) throw ConfigError("tikhonov must be positive");
}

namespace {

struct Side {
  std::vector<LegId> env_legs;
  std::vector<LegId> ket_order;  // original leg order
  std::vector<std::size_t> env_dims;
  std::size_t env_size = 1;
  MatrixC q;  // env_size x k
  MatrixC r;  // k x (d * D_bond), column index p * D_bond + b
  std::size_t d = 0;
  std::size_t bond = 0;
};

Side make_side(const Tensor& ket, const LegId& bond, const std::vector<LegId>& env_legs, bool reduce) {
  Side s;
  s.env_legs = env_legs;
  s.ket_order = ket.legs();
  if (!ket.has_leg("p")) throw UnknownLeg("edge ket has no physical leg");
  if (!ket.has_leg(bond)) throw UnknownLeg("edge ket has no bond leg " + bond);
  if (ket.rank() != env_legs.size() + 2) throw ShapeMismatch("edge ket legs are not covered by the ring");
  for (const auto& l : env_legs) {
    s.env_dims.push_back(ket.dim(l));
    s.env_size *= ket.dim(l);
  }
  s.d = ket.dim("p");
  s.bond = ket.dim(bond);
  std::vector<LegId> order = env_legs;
  order.push_back("p");
  order.push_back(bond);
  Tensor k = ket.permuted(order);
  k.set_scale_exp(0);
  MatrixC m = k.matrix(env_legs);
  if (reduce && m.rows() > m.cols()) {
    Eigen::HouseholderQR<MatrixC> qr(m);
    const Eigen::Index n = m.cols();
    s.q = qr.householderQ() * MatrixC::Identity(m.rows(), n);
    s.r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  } else {
    s.q = MatrixC::Identity(m.rows(), m.rows());
    s.r = m;
  }
  return s;
}

// Hermitian PSD metric G on (x_i, x_j) with norm = psi^dagger G psi, trace one.
MatrixC environment_metric(const EdgeTN& e, const Side& si, const Side& sj, double& min_eig) {
  const Eigen::Index n = static_cast<Eigen::Index>(si.env_size * sj.env_size);
  MatrixC g;
  if (e.ring_legs.empty()) {
    g = MatrixC::Identity(n, n);
  } else {
    Tensor env = edge_environment(e);
    std::vector<LegId> kets, bras;
    for (std::size_t k = 0; k < e.ring_legs.size(); ++k) {
      const LegId name = (k < e.n_i ? "i:" : "j:") + e.ring_legs[k];
      const std::size_t D = (k < e.n_i ? e.ket_i : e.ket_j).dim(e.ring_legs[k]);
      env = split_leg(env, name, {name, name + "*"}, {D, D});
    }
    for (const auto& l : si.env_legs) kets.push_back("i:" + l);
    for (const auto& l : sj.env_legs) kets.push_back("j:" + l);
    for (const auto& l : kets) bras.push_back(l + "*");
    std::vector<LegId> order = kets;
    order.insert(order.end(), bras.begin(), bras.end());
    env = env.permuted(order);
    env.set_scale_exp(0);
    g = env.matrix(kets).transpose();
  }
  // Remove the ring's arbitrary phase and scale, then project onto Hermitian PSD matrices.
  Complex tr = g.trace();
  if (std::abs(tr) == 0.0 || !std::isfinite(std::abs(tr))) throw SingularNormalMatrix("environment has zero trace");
  g *= std::conj(tr) / (std::abs(tr) * std::abs(tr));
  g = 0.5 * (g + g.adjoint());
  Eigen::SelfAdjointEigenSolver<MatrixC> es(g);
  const Eigen::VectorXd& w = es.eigenvalues();
  const double top = std::max(w.maxCoeff(), 1e-300);
  min_eig = w.minCoeff() / top;
  Eigen::VectorXd c = w.cwiseMax(0.0);
  return es.eigenvectors() * c.asDiagonal() * es.eigenvectors().adjoint();
}

double quad(const MatrixC& m, const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return (a.adjoint() * m * b)(0, 0).real();
}

// Solves h x = r for Hermitian PSD h, retrying with a Tikhonov shift.
Eigen::VectorXcd solve_normal(const MatrixC& h, const Eigen::VectorXcd& r, double tikhonov, std::size_t& regularized) {
  auto attempt = [&](const MatrixC& m, Eigen::VectorXcd& x) {
    Eigen::LDLT<MatrixC> ldlt(m);
    if (ldlt.info() != Eigen::Success) return false;
    x = ldlt.solve(r);
    if (!x.allFinite()) return false;
    const double scale = std::max(r.norm(), 1e-300);
    return (m * x - r).norm() <= 1e-8 * scale;
  };
  Eigen::VectorXcd x;
  if (attempt(h, x)) return x;
  ++regularized;
  const double shift = tikhonov * std::max(std::abs(h.trace()), 1e-300);
  MatrixC m = h + shift * MatrixC::Identity(h.rows(), h.cols());
  Eigen::LDLT<MatrixC> ldlt(m);
  x = ldlt.solve(r);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) throw SingularNormalMatrix("normal equations stay singular after regularization");
  return x;
}

}  // namespace

ALSResult als_update(const EdgeTN& e, const Tensor& gate, const ALSConfig& cfg) {
  cfg.validate();
  std::vector<LegId> env_i(e.ring_legs.begin(), e.ring_legs.begin() + static_cast<std::ptrdiff_t>(e.n_i));
  std::vector<LegId> env_j(e.ring_legs.begin() + static_cast<std::ptrdiff_t>(e.n_i), e.ring_legs.end());
  Side si = make_side(e.ket_i, e.bond_i, env_i, cfg.use_reduced_env);
  Side sj = make_side(e.ket_j, e.bond_j, env_j, cfg.use_reduced_env);
  if (si.bond != sj.bond) throw DimensionMismatch("edge kets disagree on the bond dimension");
  const std::size_t d = si.d;
  if (sj.d != d) throw DimensionMismatch("edge kets have different physical dimensions");
  MatrixC gm = gate_matrix(gate);
  if (gm.rows() != static_cast<Eigen::Index>(d * d)) throw ShapeMismatch("gate does not match the physical dimension");

  ALSResult res;
  MatrixC metric = environment_metric(e, si, sj, res.env_min_eigenvalue);
  MatrixC qq = Eigen::kroneckerProduct(si.q, sj.q).eval();
  MatrixC reduced = qq.adjoint() * metric * qq;
  reduced = 0.5 * (reduced + reduced.adjoint());

  // Vectors over (k_i, p_i, k_j, p_j); I = (k_i, p_i), J = (k_j, p_j).
  const auto ki = si.r.rows(), kj = sj.r.rows();
  const auto di = static_cast<Eigen::Index>(d);
  const auto nI = ki * di, nJ = kj * di, n = nI * nJ;
  const auto Db = static_cast<Eigen::Index>(si.bond);
  MatrixC M = MatrixC::Zero(n, n);
  for (Eigen::Index a = 0; a < ki; ++a)
    for (Eigen::Index b = 0; b < kj; ++b)
      for (Eigen::Index a2 = 0; a2 < ki; ++a2)
        for (Eigen::Index b2 = 0; b2 < kj; ++b2) {
          Complex v = reduced(a * kj + b, a2 * kj + b2);
          if (v == Complex(0.0)) continue;
          for (Eigen::Index p = 0; p < di; ++p)
            for (Eigen::Index q = 0; q < di; ++q) {
              M(((a * di + p) * kj + b) * di + q, ((a2 * di + p) * kj + b2) * di + q) = v;
            }
        }

  // Evolved pair theta = gate (R_i R_j).
  Eigen::VectorXcd theta = Eigen::VectorXcd::Zero(n);
  for (Eigen::Index a = 0; a < ki; ++a)
    for (Eigen::Index b = 0; b < kj; ++b)
      for (Eigen::Index p = 0; p < di; ++p)
        for (Eigen::Index q = 0; q < di; ++q) {
          Complex psi0 = 0.0;
          for (Eigen::Index x = 0; x < Db; ++x) psi0 += si.r(a, p * Db + x) * sj.r(b, q * Db + x);
          if (psi0 == Complex(0.0)) continue;
          for (Eigen::Index p2 = 0; p2 < di; ++p2)
            for (Eigen::Index q2 = 0; q2 < di; ++q2) {
              theta(((a * di + p2) * kj + b) * di + q2) += gm(p2 * di + q2, p * di + q) * psi0;
            }
        }
  const double theta_norm2 = quad(M, theta, theta);
  if (!(theta_norm2 > 0.0)) throw SingularNormalMatrix("evolved pair has zero norm in its environment");
  M /= theta_norm2;  // phi is relative to |psi'|^2 from here on

  // SVD start, truncated to D.
  Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> tmat(theta.data(), nI, nJ);
  Eigen::JacobiSVD<MatrixC> svd(MatrixC(tmat), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  for (Eigen::Index k = 0; k < sv.size(); ++k) res.evolved_bond += sv(k) > 1e-14 * sv(0);
  const auto D = static_cast<Eigen::Index>(cfg.D);
  MatrixC A = MatrixC::Zero(nI, D), B = MatrixC::Zero(nJ, D);
  for (Eigen::Index k = 0; k < std::min(D, sv.size()); ++k) {
    A.col(k) = svd.matrixU().col(k) * std::sqrt(sv(k));
    B.col(k) = svd.matrixV().col(k).conjugate() * std::sqrt(sv(k));
  }

  auto psi_of = [&](const MatrixC& a, const MatrixC& b) {
    MatrixC p = a * b.transpose();
    Eigen::VectorXcd v(n);
    for (Eigen::Index I = 0; I < nI; ++I)
      for (Eigen::Index J = 0; J < nJ; ++J) v(I * nJ + J) = p(I, J);
    return v;
  };
  const Eigen::VectorXcd mtheta = M * theta;
  auto phi_of = [&](const Eigen::VectorXcd& psi) {
    Eigen::VectorXcd mp = M * psi;
    double v = psi.dot(mp).real() + 1.0 - 2.0 * psi.dot(mtheta).real();
    return std::max(v, 0.0);
  };
  double phi = phi_of(psi_of(A, B));
  res.phi_history.push_back(phi);

  // One half-sweep: psi = L x with x the row-major entries of the free factor.
  auto half_step = [&](bool free_a) {
    const MatrixC& fixed = free_a ? B : A;
    const Eigen::Index nfree = (free_a ? nI : nJ) * D;
    MatrixC L = MatrixC::Zero(n, nfree);
    for (Eigen::Index I = 0; I < nI; ++I)
      for (Eigen::Index J = 0; J < nJ; ++J)
        for (Eigen::Index x = 0; x < D; ++x) {
          if (free_a) {
            L(I * nJ + J, I * D + x) = fixed(J, x);
          } else {
            L(I * nJ + J, J * D + x) = fixed(I, x);
          }
        }
    MatrixC ML = M * L;
    MatrixC h = L.adjoint() * ML;
    h = 0.5 * (h + h.adjoint());
    Eigen::VectorXcd rhs = ML.adjoint() * theta;
    Eigen::VectorXcd x = solve_normal(h, rhs, cfg.tikhonov, res.regularized_solves);
    MatrixC out(free_a ? nI : nJ, D);
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < D; ++c) out(r, c) = x(r * D + c);
    return out;
  };

  if (phi > 1e-15) {
    for (std::size_t sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      const double before = phi;
      for (bool free_a : {true, false}) {
        MatrixC next = half_step(free_a);
        double p = free_a ? phi_of(psi_of(next, B)) : phi_of(psi_of(A, next));
        if (p <= phi) {
          (free_a ? A : B) = std::move(next);
          phi = p;
        }
      }
      res.phi_history.push_back(phi);
      res.sweeps = sweep + 1;
      if (phi <= 1e-15 || before - phi <= cfg.phi_tolerance * before) break;
    }
  }

  // Balanced gauge: A B^T = (Qa U sqrt S)(Qb V* sqrt S)^T.
  Eigen::HouseholderQR<MatrixC> qa(A), qb(B);
  const Eigen::Index ra = std::min(nI, D), rb = std::min(nJ, D);
  MatrixC Qa = qa.householderQ() * MatrixC::Identity(nI, ra);
  MatrixC Qb = qb.householderQ() * MatrixC::Identity(nJ, rb);
  MatrixC Ra = MatrixC(qa.matrixQR().topRows(ra).triangularView<Eigen::Upper>());
  MatrixC Rb = MatrixC(qb.matrixQR().topRows(rb).triangularView<Eigen::Upper>());
  Eigen::JacobiSVD<MatrixC> core(Ra * Rb.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  MatrixC An = MatrixC::Zero(nI, D), Bn = MatrixC::Zero(nJ, D);
  for (Eigen::Index k = 0; k < core.singularValues().size(); ++k) {
    const double s = std::sqrt(core.singularValues()(k));
    An.col(k) = Qa * core.matrixU().col(k) * s;
    Bn.col(k) = Qb * core.matrixV().col(k).conjugate() * s;
  }

  auto assemble = [&](const Side& s, const MatrixC& f, const LegId& bond) {
    // f rows (k, p), columns bond; the ket is Q f over (env, p, bond).
    const auto kk = s.r.rows();
    MatrixC fk(kk, di * D);
    for (Eigen::Index a = 0; a < kk; ++a)
      for (Eigen::Index p = 0; p < di; ++p)
        for (Eigen::Index x = 0; x < D; ++x) fk(a, p * D + x) = f(a * di + p, x);
    MatrixC full = s.q * fk;
    std::vector<LegId> legs = s.env_legs;
    std::vector<std::size_t> dims = s.env_dims;
    legs.push_back("p");
    dims.push_back(d);
    legs.push_back(bond);
    dims.push_back(cfg.D);
    Tensor t = Tensor::from_matrix(full, legs, dims).permuted(s.ket_order);
    const double m = t.max_abs();
    if (!(m > 0.0) || !std::isfinite(m)) throw SingularNormalMatrix("bond update produced a zero tensor");
    return t.scaled(1.0 / m);
  };
  res.ket_i = assemble(si, An, e.bond_i);
  res.ket_j = assemble(sj, Bn, e.bond_j);
  return res;
}

// ---------------------------------------------------------------------------------------------
// Noise

UnitCell gaussian_perturb(const Lattice& lattice, const UnitCell& uc, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  uc.validate(lattice);
  if (sigma == 0.0) return uc;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  UnitCell out;
  for (const auto& t0 : uc.tensors) {
    Tensor t = t0.with_scale_folded();
    const double scale = sigma * t.norm() / std::sqrt(static_cast<double>(t.size()));
    for (auto& x : t.data()) x += scale * Complex(g(rng), g(rng));
    out.tensors.push_back(std::move(t));
  }
  return out;
}

Block gaussian_perturb(const Block& block, double sigma, std::uint64_t seed) {
  return with_unit_cell(block, gaussian_perturb(block.lattice, block.unit_cell, sigma, seed));
}

}  // namespace kbp
