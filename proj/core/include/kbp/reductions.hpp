#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "kbp/kagome_block.hpp"
#include "kbp/mps.hpp"
#include "kbp/tensor.hpp"
#include "kbp/tn_graph.hpp"

namespace kbp {

// A set of block sites surrounded by a periodic MPS. Ring legs refer to
// (site_node(i), block edge name) of the region's sites.
struct RegionTN {
  Lattice lattice;
  std::vector<std::size_t> sites;
  std::map<std::size_t, Tensor> kets;     // legs {"p", block edge names}
  std::map<std::size_t, BlockSite> info;  // role and leg names of each site
  RingEnvironment env;
  double truncation_error = 0.0;
};

struct CoreTN : RegionTN {
  std::array<std::array<std::size_t, 3>, 3> triangles{};  // one per unit-cell copy
  std::array<std::size_t, 3> down_triangle{};
};

enum class Mode { A, B, C };
Mode mode_from_string(const std::string& s);  // throws UnknownMode
std::string to_string(Mode m);

struct ModeTN : RegionTN {
  Mode mode = Mode::A;
};

// Two kets and the ring around them. Ring sites [0, n_i) attach to i and the rest to j,
// counter-clockwise. Kets carry {"p", unit-cell leg names}.
struct EdgeTN {
  std::size_t site_i = 0;
  std::size_t site_j = 0;
  int role_i = 0;
  int role_j = 0;
  LegId bond_i;  // leg of i carrying the bond
  LegId bond_j;
  Tensor ket_i;
  Tensor ket_j;
  PeriodicMPS ring;
  std::vector<LegId> ring_legs;
  std::size_t n_i = 0;
};

// Contracts the block with all messages everywhere except the core, in two bubbles
// grown from opposite faces and zipped into one ring.
CoreTN block_to_core(const Block& block, const std::vector<MPS>& messages, std::size_t chi,
                     std::size_t core = 0);

// Exact reductions: absorb the region's other sites into the ring.
ModeTN core_to_mode(const CoreTN& core, Mode mode);
// `edge` is either a unit-cell bond name or a block inner edge name "i-j".
EdgeTN mode_to_edge(const ModeTN& mode, const std::string& edge);
EdgeTN region_to_edge(const RegionTN& region, std::size_t i, std::size_t j);

struct RegionBond {
  std::string bond;  // unit-cell bond name
  std::string edge;  // block edge name
  std::size_t a = 0;  // site holding the bond's first role
  std::size_t b = 0;
};
std::vector<RegionBond> region_bonds(const RegionTN& region);

// Region sites as braket nodes plus ring nodes "e0".."e{n-1}". Sites in open_sites keep
// "p" and "p*" open.
TNGraph region_network(const RegionTN& region, const std::vector<std::size_t>& open_sites = {});
// Nodes "i", "j" and "e0".."e{n-1}".
TNGraph edge_network(const EdgeTN& edge, bool open_physical = false);

// Edge whose environment is the identity on every ring leg.
EdgeTN identity_edge(const Tensor& ket_i, const Tensor& ket_j, const LegId& bond_i, const LegId& bond_j);

// Ring contracted to one tensor; leg k is named ring_legs[k] with a "i:" or "j:" prefix and
// holds the fused (ket, bra) pair.
Tensor edge_environment(const EdgeTN& edge);

}  // namespace kbp
