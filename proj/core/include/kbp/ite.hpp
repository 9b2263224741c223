#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "kbp/kagome_block.hpp"
#include "kbp/operators.hpp"
#include "kbp/reductions.hpp"
#include "kbp/tensor.hpp"

namespace kbp {

// exp(-h dt) with legs {"i_out", "j_out", "i_in", "j_in"}.
Tensor build_gate(const BondTerm& term, double dt);
MatrixC gate_matrix(const Tensor& gate);
// Exchanges the roles of the two sites.
Tensor swap_gate_sites(const Tensor& gate);

// A term together with the labels of the two sites it acts on.
struct SupportedTerm {
  BondTerm term;
  std::array<std::string, 2> sites;
};
using TermGroup = std::vector<SupportedTerm>;

struct GateApplication {
  std::string edge;
  double dt_fraction = 1.0;
  std::size_t group = 0;
};

struct TrotterSchedule {
  std::vector<GateApplication> applications;  // one palindromic sweep
  std::vector<double> dt_list;
};

// e^{-H_1 dt/2} ... e^{-H_K dt} ... e^{-H_1 dt/2}. Throws NonCommutingWithinGroup when two
// terms of one group share a site.
TrotterSchedule trotter_schedule(const std::vector<TermGroup>& groups, double dt);
TrotterSchedule trotter_schedule(const std::vector<TermGroup>& groups, std::vector<double> dt_list);

// [0.1] x 100, [0.05] x 100, [0.01] x 200, [0.001] x 200.
std::vector<double> default_dt_schedule();

// The six kagome bonds as single-term groups with sites "<role>@<a>,<b>".
std::vector<TermGroup> kagome_groups(const BondTerm& prototype);

struct ALSConfig {
  std::size_t D = 2;
  std::size_t max_sweeps = 50;
  double phi_tolerance = 1e-10;  // relative decrease of phi that ends the sweeps
  bool use_reduced_env = true;
  double tikhonov = 1e-12;  // relative to the trace of the normal matrix

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct ALSResult {
  Tensor ket_i;  // same legs as the input kets, bond leg of dimension cfg.D
  Tensor ket_j;
  // phi relative to the evolved state's squared norm; entry 0 follows the SVD start.
  std::vector<double> phi_history;
  std::size_t sweeps = 0;
  std::size_t regularized_solves = 0;
  double env_min_eigenvalue = 0.0;  // relative to the largest, before clipping
  std::size_t evolved_bond = 0;     // rank of the evolved pair across the bond
};

// Gate rows act on (p of ket_i, p of ket_j).
ALSResult als_update(const EdgeTN& edge, const Tensor& gate, const ALSConfig& cfg);

// Adds complex Gaussian noise of scale sigma * |T| / sqrt(size) to every unit-cell tensor.
UnitCell gaussian_perturb(const Lattice& lattice, const UnitCell& uc, double sigma, std::uint64_t seed);
Block gaussian_perturb(const Block& block, double sigma, std::uint64_t seed);

}  // namespace kbp
