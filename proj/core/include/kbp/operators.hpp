#pragma once

#include <string>

#include "kbp/tensor.hpp"

namespace kbp {

// Two-site operator on d x d, row index (a_i * d + a_j).
struct BondTerm {
  std::string edge;
  std::size_t d = 2;
  MatrixC h;
};

// Pauli matrices; axis 0, 1, 2 = x, y, z.
MatrixC pauli(int axis);

// (1/4)(XX + YY + ZZ).
BondTerm heisenberg_term(const std::string& edge = "");

// Throws ShapeMismatch unless h is d^2 x d^2 and Hermitian to 1e-12.
void check_term(const BondTerm& term);

}  // namespace kbp
