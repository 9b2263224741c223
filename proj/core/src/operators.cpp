#include "kbp/operators.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include "kbp/error.hpp"

namespace kbp {

MatrixC pauli(int axis) {
  MatrixC s(2, 2);
  const Complex i(0.0, 1.0);
  switch (axis) {
    case 0: s << 0.0, 1.0, 1.0, 0.0; break;
    case 1: s << 0.0, -i, i, 0.0; break;
    case 2: s << 1.0, 0.0, 0.0, -1.0; break;
    default: throw ShapeMismatch("pauli axis must be 0, 1 or 2");
  }
  return s;
}

BondTerm heisenberg_term(const std::string& edge) {
  BondTerm t;
  t.edge = edge;
  t.d = 2;
  t.h = MatrixC::Zero(4, 4);
  for (int a = 0; a < 3; ++a) {
    MatrixC s = pauli(a);
    t.h += 0.25 * Eigen::kroneckerProduct(s, s).eval();
  }
  return t;
}

void check_term(const BondTerm& term) {
  const auto n = static_cast<Eigen::Index>(term.d * term.d);
  if (term.h.rows() != n || term.h.cols() != n) throw ShapeMismatch("bond term must be d^2 x d^2");
  if ((term.h - term.h.adjoint()).norm() > 1e-12 * std::max(1.0, term.h.norm())) {
    throw ShapeMismatch("bond term is not Hermitian");
  }
}

}  // namespace kbp
