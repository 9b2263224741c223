#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kbp/lattice.hpp"
#include "kbp/mps.hpp"
#include "kbp/tensor.hpp"
#include "kbp/tn_graph.hpp"

namespace kbp {

// One tensor per lattice role, legs {"p", <role legs in counter-clockwise order>}.
struct UnitCell {
  std::vector<Tensor> tensors;

  static UnitCell random(const Lattice& lattice, std::size_t d, std::size_t D, std::mt19937_64& rng);
  // Bond dimension 1 product state; states[role] is the physical vector of that role.
  static UnitCell product(const Lattice& lattice, const std::vector<std::vector<Complex>>& states);

  std::size_t phys_dim() const;
  std::size_t bond_dim() const;
  // Throws ShapeMismatch when legs or dims disagree with the lattice.
  void validate(const Lattice& lattice) const;
};

enum class BlockShape { Hexagon, Parallelogram, Custom };

struct BlockSite {
  Cell cell{0, 0};
  int role = 0;
  Vec2 position;
  std::vector<std::string> edges;      // block edge names, counter-clockwise
  std::vector<std::string> role_legs;  // matching unit-cell leg names
};

struct InnerEdge {
  std::string name;  // "i-j" with i < j
  std::size_t a = 0;
  std::size_t b = 0;
  std::string bond;
};

struct OuterEdge {
  std::string name;  // "<face>-<rank>"
  std::size_t site = 0;
  std::string leg;  // unit-cell leg name at `site`
  std::size_t face = 0;
  std::size_t rank = 0;
  Cell partner_cell{0, 0};
  int partner_role = 0;
  Vec2 midpoint;
};

struct BlockFace {
  std::string name;
  Cell translation{0, 0};  // cell offset of the neighbouring copy across this face
  double angle = 0.0;      // direction of the translation, degrees
  double normal = 0.0;     // outward normal of the face side, degrees
  std::size_t opposite = 0;
  std::vector<std::size_t> edges;  // outer edge indices by counter-clockwise rank
};

struct BlockPlans;

struct Block {
  BlockShape shape = BlockShape::Custom;
  int size = 0;
  Lattice lattice;
  UnitCell unit_cell;
  int orientation = 0;  // multiples of 120 degrees applied by rotate_block

  std::vector<Cell> cells;  // triangle index -> cell
  std::vector<std::vector<std::size_t>> triangles;  // triangle index -> site indices
  std::vector<BlockSite> sites;
  std::vector<InnerEdge> inner;
  std::vector<OuterEdge> outer;
  std::vector<BlockFace> faces;
  std::shared_ptr<const BlockPlans> plans;  // shared by all copies with this geometry

  std::size_t site_count() const { return sites.size(); }
  std::optional<std::size_t> site_at(Cell c, int role) const;
  std::size_t face_index(const std::string& name) const;
  // Ket tensor of site i with legs {"p", <edge names>}.
  Tensor site_tensor(std::size_t i) const;
  // Unit-cell leg name -> block edge name at site i.
  std::string edge_of(std::size_t i, const std::string& role_leg) const;
  std::string role_leg_of(std::size_t i, const std::string& edge) const;
  // Sites lying on the side of face f (corner sites count for both of their sides).
  std::vector<std::size_t> face_sites(std::size_t f) const;
  Vec2 center() const;
};

enum class FaceAssignment {
  Translation,  // an edge belongs to the face whose neighbouring copy holds its partner
  Sector,       // an edge belongs to the face its midpoint points at from the block centre
};

struct FaceSpec {
  std::string name;
  Cell translation;
};

Block build_block(const UnitCell& unit_cell, int N);
Block build_parallelogram(const UnitCell& unit_cell, int L);
Block build_custom(const Lattice& lattice, std::vector<Cell> cells, std::vector<FaceSpec> faces,
                   FaceAssignment assignment, BlockShape shape = BlockShape::Custom, int size = 0);
// Hexagonal triangular-lattice block whose copies are placed so that the edges of one face
// land in several different neighbours. `mirrored` selects the other tiling chirality.
Block triangular_hexagon(int N, bool mirrored);

std::vector<std::string> check_tiling(const Block& block);

// For each edge rank k of face f, the rank of its periodic partner on the opposite face.
std::vector<std::size_t> face_partner_ranks(const Block& block, std::size_t f);

// Hexagonal cell set max(|x|, |y|, |x + y|) <= N - 1 and its six neighbour translations.
std::vector<Cell> hexagon_cells(int N);
std::vector<Cell> hexagon_translations(int N);

// Rotation by steps * 120 degrees about the centre of triangle (0, 0).
Cell rotate_cell(Cell c, int steps);
std::vector<std::size_t> rotation_site_map(const Block& block, int steps);
std::map<std::string, std::string> rotation_leg_map(const Lattice& lattice, int steps);
int rotate_role(int role, int steps);
UnitCell rotate_unit_cell(const Lattice& lattice, const UnitCell& uc, int steps);
// angle in {0, 120, 240}. The block geometry is unchanged; the stored state is rotated.
Block rotate_block(const Block& block, int angle);
Block with_unit_cell(const Block& block, UnitCell uc);

// Ket and conjugate bra contracted over `phys`; each remaining leg x becomes a fused
// (ket, bra) leg x of dimension D^2, ket-major, in the original order.
Tensor braket(const Tensor& ket, const LegId& phys = "p");
// As braket() but the physical legs stay open as `phys` and `phys + "*"`.
Tensor braket_open(const Tensor& ket, const LegId& phys = "p");

std::string site_node(std::size_t i);
std::string message_node(const Block& block, std::size_t face, std::size_t rank);

// Block sites as braket nodes plus one message chain per face with a non-empty MPS.
// Sites listed in open_sites keep their physical legs ("p", "p*") open.
struct BlockNetwork {
  TNGraph tn;
  std::map<NodeId, Vec2> positions;
};
BlockNetwork block_network(const Block& block, const std::vector<MPS>& messages,
                           const std::vector<std::size_t>& open_sites = {});

struct CorePlan {
  std::vector<std::size_t> core_sites;
  std::array<std::size_t, 3> core_triangles{};
  std::vector<std::size_t> down_triangle;  // the three core sites of the central down triangle
  SweepPlan lower;                         // bubble grown from the first face
  SweepPlan upper;                         // bubble grown from the opposite face
};

// Sweep plans over the block network with all messages present.
struct BlockPlans {
  std::vector<SweepPlan> outgoing;  // per face: everything but that face's messages
  std::vector<CorePlan> cores;      // per orientation (hexagon) or a single entry
};

std::shared_ptr<const BlockPlans> make_block_plans(const Block& block);

}  // namespace kbp
