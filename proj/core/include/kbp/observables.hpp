#pragma once

#include <array>
#include <vector>

#include "kbp/operators.hpp"
#include "kbp/reductions.hpp"
#include "kbp/tensor.hpp"

namespace kbp {

// Square density matrix over subsystems of the given dims, row index ket-major.
struct DensityMatrix {
  std::vector<std::size_t> dims;
  MatrixC data;
  bool normalized = false;
  double min_eigenvalue = 0.0;  // recorded after symmetrization
};

// Hermitian part, scaled to unit trace.
DensityMatrix make_density(const MatrixC& m, std::vector<std::size_t> dims);

// Environment ring contracted against open physical legs of the two edge sites.
DensityMatrix rdm_two_site(const EdgeTN& edge);
// Keeps subsystem `keep` (0 or 1) of a bipartite matrix.
DensityMatrix partial_trace(const DensityMatrix& rho, std::size_t keep);
// Transposes subsystem `which` (0 = A, 1 = B).
MatrixC partial_transpose(const DensityMatrix& rho, std::size_t which);

double bond_energy(const DensityMatrix& rho, const BondTerm& term);
std::array<double, 3> magnetization(const DensityMatrix& rho1);

// Tolerated negative eigenvalues before NonPSDInput.
inline constexpr double kPsdTolerance = 1e-8;

struct SqrtResult {
  MatrixC root;
  double clipped = 0.0;  // largest negative eigenvalue magnitude removed
};
// Principal square root of the Hermitian part: Schur method, eigen-clipping fallback.
SqrtResult sqrt_psd(const MatrixC& m);

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
double negativity(const DensityMatrix& rho);

}  // namespace kbp
