#include "kbp/kagome_block.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "kbp/error.hpp"

namespace kbp {

namespace {

constexpr double kGeomTol = 1e-6;

Vec2 rotate_about(Vec2 p, Vec2 c, double deg) {
  double r = deg * std::numbers::pi / 180.0;
  Vec2 d = p - c;
  return c + Vec2{std::cos(r) * d.x - std::sin(r) * d.y, std::sin(r) * d.x + std::cos(r) * d.y};
}

bool close(Vec2 a, Vec2 b) { return std::abs(a.x - b.x) < kGeomTol && std::abs(a.y - b.y) < kGeomTol; }

long det(Cell a, Cell b) { return long(a[0]) * b[1] - long(a[1]) * b[0]; }

Vec2 triangle_centre(const Lattice& lat) {
  Vec2 c;
  for (int r = 0; r < static_cast<int>(lat.roles.size()); ++r) c = c + lat.role_offsets[r];
  return (1.0 / double(lat.roles.size())) * c;
}

struct Nominal {
  const char* name;
  double angle;
};

// Outward side normals; for the parallelogram the slanted sides are not normal to their translation.
double side_normal(const std::string& name, std::size_t faces) {
  static const std::map<std::string, double> six{{"D", 270}, {"DR", 330}, {"UR", 30}, {"U", 90}, {"UL", 150}, {"DL", 210}};
  static const std::map<std::string, double> four{{"D", 270}, {"R", 30}, {"U", 90}, {"L", 210}};
  const auto& table = faces == 6 ? six : four;
  auto it = table.find(name);
  if (it == table.end()) throw InvalidGeometry("face '" + name + "' has no nominal side");
  return it->second;
}

std::string nearest_name(double angle, const std::vector<Nominal>& table) {
  const Nominal* best = &table.front();
  for (const auto& n : table) {
    if (std::abs(angle_diff(angle, n.angle)) < std::abs(angle_diff(angle, best->angle))) best = &n;
  }
  return best->name;
}

std::vector<FaceSpec> name_faces(const Lattice& lat, const std::vector<Cell>& translations) {
  static const std::vector<Nominal> six{{"D", 270}, {"DR", 330}, {"UR", 30}, {"U", 90}, {"UL", 150}, {"DL", 210}};
  static const std::vector<Nominal> four{{"D", 300}, {"R", 0}, {"U", 120}, {"L", 180}};
  std::vector<FaceSpec> out;
  std::set<std::string> used;
  for (Cell t : translations) {
    double a = angle_deg(lat.cell_origin(t));
    std::string n = nearest_name(a, translations.size() == 6 ? six : four);
    if (!used.insert(n).second) throw InvalidGeometry("two faces share the nominal direction " + n);
    out.push_back({n, t});
  }
  return out;
}

void check_size(int n, const char* what) {
  if (n < 2) throw InvalidSize(std::string(what) + " must be >= 2, got " + std::to_string(n));
}

void check_hexagon(const Block& b) {
  if (b.shape != BlockShape::Hexagon) throw UnsupportedShape("rotation needs a hexagonal block");
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// UnitCell

UnitCell UnitCell::random(const Lattice& lattice, std::size_t d, std::size_t D, std::mt19937_64& rng) {
  UnitCell uc;
  for (int r = 0; r < static_cast<int>(lattice.roles.size()); ++r) {
    std::vector<LegId> legs{"p"};
    std::vector<std::size_t> dims{d};
    for (const auto& l : lattice.legs(r)) {
      legs.push_back(l.name);
      dims.push_back(D);
    }
    Tensor t = Tensor::random(legs, dims, rng);
    uc.tensors.push_back(t.scaled(1.0 / t.max_abs()));
  }
  return uc;
}

UnitCell UnitCell::product(const Lattice& lattice, const std::vector<std::vector<Complex>>& states) {
  if (states.size() != lattice.roles.size()) throw ShapeMismatch("one state per role required");
  UnitCell uc;
  for (int r = 0; r < static_cast<int>(lattice.roles.size()); ++r) {
    std::vector<LegId> legs{"p"};
    std::vector<std::size_t> dims{states[r].size()};
    for (const auto& l : lattice.legs(r)) {
      legs.push_back(l.name);
      dims.push_back(1);
    }
    uc.tensors.emplace_back(legs, dims, states[r]);
  }
  return uc;
}

std::size_t UnitCell::phys_dim() const { return tensors.empty() ? 0 : tensors.front().dim("p"); }

std::size_t UnitCell::bond_dim() const {
  if (tensors.empty() || tensors.front().rank() < 2) return 1;
  return tensors.front().dims()[1];
}

void UnitCell::validate(const Lattice& lattice) const {
  if (tensors.size() != lattice.roles.size()) {
    throw ShapeMismatch("unit cell has " + std::to_string(tensors.size()) + " tensors, lattice has " +
                        std::to_string(lattice.roles.size()) + " roles");
  }
  const std::size_t d = phys_dim();
  const std::size_t D = bond_dim();
  for (int r = 0; r < static_cast<int>(tensors.size()); ++r) {
    const Tensor& t = tensors[r];
    std::vector<LegId> want{"p"};
    for (const auto& l : lattice.legs(r)) want.push_back(l.name);
    if (t.legs() != want) throw ShapeMismatch("role " + lattice.roles[r] + " has unexpected legs");
    if (t.dim("p") != d) throw ShapeMismatch("physical dims differ between roles");
    for (std::size_t i = 1; i < t.rank(); ++i) {
      if (t.dims()[i] != D) throw ShapeMismatch("virtual dims differ on role " + lattice.roles[r]);
    }
  }
}

// ---------------------------------------------------------------------------------------------
// Block accessors

std::optional<std::size_t> Block::site_at(Cell c, int role) const {
  for (std::size_t t = 0; t < cells.size(); ++t) {
    if (cells[t] == c) {
      for (std::size_t s : triangles[t]) {
        if (sites[s].role == role) return s;
      }
    }
  }
  return std::nullopt;
}

std::size_t Block::face_index(const std::string& name) const {
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (faces[f].name == name) return f;
  }
  throw UnknownEdge("no face '" + name + "'");
}

Tensor Block::site_tensor(std::size_t i) const {
  const BlockSite& s = sites.at(i);
  std::map<LegId, LegId> names;
  for (std::size_t k = 0; k < s.edges.size(); ++k) names[s.role_legs[k]] = s.edges[k];
  return unit_cell.tensors.at(s.role).renamed(names);
}

std::string Block::edge_of(std::size_t i, const std::string& role_leg) const {
  const BlockSite& s = sites.at(i);
  for (std::size_t k = 0; k < s.role_legs.size(); ++k) {
    if (s.role_legs[k] == role_leg) return s.edges[k];
  }
  throw UnknownLeg("site " + std::to_string(i) + " has no leg " + role_leg);
}

std::string Block::role_leg_of(std::size_t i, const std::string& edge) const {
  const BlockSite& s = sites.at(i);
  for (std::size_t k = 0; k < s.edges.size(); ++k) {
    if (s.edges[k] == edge) return s.role_legs[k];
  }
  throw UnknownEdge("site " + std::to_string(i) + " has no edge " + edge);
}

std::vector<std::size_t> Block::face_sites(std::size_t f) const {
  double a = faces.at(f).normal * std::numbers::pi / 180.0;
  Vec2 u{std::cos(a), std::sin(a)};
  double top = -1e300;
  for (const auto& s : sites) top = std::max(top, dot(s.position, u));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (dot(sites[i].position, u) > top - kGeomTol) out.push_back(i);
  }
  return out;
}

Vec2 Block::center() const {
  Vec2 c;
  for (const auto& s : sites) c = c + s.position;
  return (1.0 / double(sites.size())) * c;
}

// ---------------------------------------------------------------------------------------------
// Construction

std::vector<Cell> hexagon_cells(int N) {
  std::vector<Cell> out;
  for (int y = -(N - 1); y <= N - 1; ++y) {
    for (int x = -(N - 1); x <= N - 1; ++x) {
      if (std::abs(x + y) <= N - 1) out.push_back({x, y});
    }
  }
  return out;
}

std::vector<Cell> hexagon_translations(int N) {
  std::vector<Cell> out;
  Cell t{N, N - 1};
  for (int k = 0; k < 6; ++k) {
    out.push_back(t);
    t = {-t[1], t[0] + t[1]};
  }
  return out;
}

Block build_custom(const Lattice& lattice, std::vector<Cell> cells, std::vector<FaceSpec> face_specs,
                   FaceAssignment assignment, BlockShape shape, int size) {
  Block b;
  b.shape = shape;
  b.size = size;
  b.lattice = lattice;
  std::sort(cells.begin(), cells.end(), [&](Cell p, Cell q) {
    Vec2 a = lattice.cell_origin(p);
    Vec2 c = lattice.cell_origin(q);
    if (std::abs(a.y - c.y) > kGeomTol) return a.y > c.y;
    return a.x < c.x;
  });
  b.cells = cells;
  std::map<Cell, std::size_t> cell_index;
  for (std::size_t t = 0; t < cells.size(); ++t) {
    if (!cell_index.emplace(cells[t], t).second) throw InvalidGeometry("duplicate cell");
  }

  std::vector<int> roles(lattice.roles.size());
  std::iota(roles.begin(), roles.end(), 0);
  std::sort(roles.begin(), roles.end(), [&](int p, int q) {
    Vec2 a = lattice.role_offsets[p];
    Vec2 c = lattice.role_offsets[q];
    if (std::abs(a.y - c.y) > kGeomTol) return a.y > c.y;
    return a.x < c.x;
  });
  std::map<std::pair<Cell, int>, std::size_t> site_index;
  for (std::size_t t = 0; t < cells.size(); ++t) {
    b.triangles.emplace_back();
    for (int r : roles) {
      site_index[{cells[t], r}] = b.sites.size();
      b.triangles.back().push_back(b.sites.size());
      BlockSite s;
      s.cell = cells[t];
      s.role = r;
      s.position = lattice.position(cells[t], r);
      for (const auto& l : lattice.legs(r)) s.role_legs.push_back(l.name);
      s.edges.resize(s.role_legs.size());
      b.sites.push_back(std::move(s));
    }
  }

  // Faces in counter-clockwise order starting just past 240 degrees (the bottom face first).
  for (const auto& spec : face_specs) {
    BlockFace f;
    f.name = spec.name;
    f.translation = spec.translation;
    f.angle = angle_deg(lattice.cell_origin(spec.translation));
    f.normal = side_normal(spec.name, face_specs.size());
    b.faces.push_back(f);
  }
  std::sort(b.faces.begin(), b.faces.end(), [](const BlockFace& p, const BlockFace& q) {
    return std::fmod(p.angle - 240.0 + 360.0, 360.0) < std::fmod(q.angle - 240.0 + 360.0, 360.0);
  });
  for (auto& f : b.faces) {
    bool found = false;
    for (std::size_t g = 0; g < b.faces.size(); ++g) {
      if (b.faces[g].translation == -f.translation) {
        f.opposite = g;
        found = true;
      }
    }
    if (!found) throw InvalidGeometry("face " + f.name + " has no opposite face");
  }

  const Vec2 centre = b.center();
  for (std::size_t i = 0; i < b.sites.size(); ++i) {
    const BlockSite& s = b.sites[i];
    auto legs = lattice.legs(s.role);
    for (std::size_t k = 0; k < legs.size(); ++k) {
      Cell pc = s.cell + legs[k].partner_offset;
      auto it = site_index.find({pc, legs[k].partner_role});
      if (it != site_index.end()) {
        std::size_t j = it->second;
        if (j == i) throw InvalidGeometry("bond closes on its own site");
        std::string name = std::to_string(std::min(i, j)) + "-" + std::to_string(std::max(i, j));
        b.sites[i].edges[k] = name;
        if (i < j) b.inner.push_back({name, i, j, lattice.bonds[legs[k].bond].name});
        continue;
      }
      OuterEdge e;
      e.site = i;
      e.leg = legs[k].name;
      e.partner_cell = pc;
      e.partner_role = legs[k].partner_role;
      e.midpoint = s.position + 0.5 * legs[k].direction;
      std::optional<std::size_t> face;
      if (assignment == FaceAssignment::Translation) {
        for (std::size_t f = 0; f < b.faces.size(); ++f) {
          if (cell_index.count(pc - b.faces[f].translation)) face = f;
        }
        if (!face) throw InvalidGeometry("edge from site " + std::to_string(i) + " lands in no neighbouring copy");
      } else {
        double a = angle_deg(e.midpoint - centre);
        double best = 1e9;
        for (std::size_t f = 0; f < b.faces.size(); ++f) {
          double diff = std::abs(angle_diff(a, b.faces[f].normal));
          if (diff < best - kGeomTol) {
            best = diff;
            face = f;
          }
        }
      }
      e.face = *face;
      b.sites[i].edges[k] = "#" + std::to_string(b.outer.size());
      b.faces[*face].edges.push_back(b.outer.size());
      b.outer.push_back(e);
    }
  }
  for (std::size_t f = 0; f < b.faces.size(); ++f) {
    auto& list = b.faces[f].edges;
    auto key = [&](std::size_t e) { return angle_diff(angle_deg(b.outer[e].midpoint - centre), b.faces[f].angle); };
    std::stable_sort(list.begin(), list.end(), [&](std::size_t p, std::size_t q) { return key(p) < key(q); });
    for (std::size_t r = 0; r < list.size(); ++r) {
      OuterEdge& e = b.outer[list[r]];
      e.rank = r;
      e.name = b.faces[f].name + "-" + std::to_string(r);
    }
  }
  for (auto& s : b.sites) {
    for (auto& name : s.edges) {
      if (name.starts_with("#")) name = b.outer[std::stoul(name.substr(1))].name;
    }
  }
  return b;
}

Block build_block(const UnitCell& unit_cell, int N) {
  check_size(N, "hexagon face length N");
  Lattice lat = kagome_lattice();
  unit_cell.validate(lat);
  Block b = build_custom(lat, hexagon_cells(N), name_faces(lat, hexagon_translations(N)), FaceAssignment::Translation,
                         BlockShape::Hexagon, N);
  b.unit_cell = unit_cell;
  b.plans = make_block_plans(b);
  return b;
}

Block build_parallelogram(const UnitCell& unit_cell, int L) {
  check_size(L, "parallelogram side L");
  Lattice lat = kagome_parallelogram_lattice();
  unit_cell.validate(lat);
  std::vector<Cell> cells;
  for (int j = 0; j < L; ++j)
    for (int i = 0; i < L; ++i) cells.push_back({i, j});
  std::vector<Cell> translations{{L, 0}, {0, L}, {-L, 0}, {0, -L}};
  Block b = build_custom(lat, cells, name_faces(lat, translations), FaceAssignment::Translation,
                         BlockShape::Parallelogram, L);
  b.unit_cell = unit_cell;
  b.plans = make_block_plans(b);
  return b;
}

Block triangular_hexagon(int N, bool mirrored) {
  check_size(N, "hexagon face length N");
  Lattice lat = triangular_lattice();
  std::vector<Cell> translations = hexagon_translations(N);
  if (mirrored) {
    for (auto& t : translations) t = {t[0] + t[1], -t[1]};
  }
  return build_custom(lat, hexagon_cells(N), name_faces(lat, translations), FaceAssignment::Sector,
                      BlockShape::Custom, N);
}

// ---------------------------------------------------------------------------------------------
// Tiling

std::vector<std::string> check_tiling(const Block& b) {
  std::vector<std::string> issues;
  if (b.faces.size() < 2) return {"block has fewer than two faces"};
  std::set<Cell> cells(b.cells.begin(), b.cells.end());
  Cell t0 = b.faces[0].translation;
  Cell t1{0, 0};
  for (const auto& f : b.faces) {
    if (det(t0, f.translation) != 0) {
      t1 = f.translation;
      break;
    }
  }
  long vol = std::abs(det(t0, t1));
  if (vol == 0) return {"face translations do not span the plane"};

  for (const auto& f : b.faces) {
    if (b.faces[f.opposite].translation != -f.translation) issues.push_back("face " + f.name + " is not opposite to its pair");
    long u = det(f.translation, t1);
    long v = det(t0, f.translation);
    if (u % det(t0, t1) != 0 || v % det(t0, t1) != 0) {
      issues.push_back("translation of face " + f.name + " is not a lattice vector of the tiling");
    }
  }
  // Translational symmetry: the block must be a fundamental domain of the translation lattice.
  if (static_cast<long>(cells.size()) != vol) {
    issues.push_back("block holds " + std::to_string(cells.size()) + " cells but the tiling needs " + std::to_string(vol));
  }
  std::set<std::pair<long, long>> residues;
  for (Cell c : cells) {
    long u = ((det(c, t1) % vol) + vol) % vol;
    long v = ((det(t0, c) % vol) + vol) % vol;
    if (!residues.insert({u, v}).second) {
      issues.push_back("cell (" + std::to_string(c[0]) + "," + std::to_string(c[1]) + ") overlaps a translated copy");
    }
  }

  // Every edge must land in the copy across its own face and re-enter through the opposite face.
  std::map<std::pair<std::size_t, std::string>, std::size_t> by_site;
  for (std::size_t e = 0; e < b.outer.size(); ++e) by_site[{b.outer[e].site, b.outer[e].leg}] = e;
  for (const auto& e : b.outer) {
    const BlockFace& f = b.faces[e.face];
    std::optional<Cell> landing;
    for (int m = -2; m <= 2 && !landing; ++m) {
      for (int n = -2; n <= 2 && !landing; ++n) {
        Cell t = m * t0 + n * t1;
        if ((m != 0 || n != 0) && cells.count(e.partner_cell - t)) landing = t;
      }
    }
    if (!landing) {
      issues.push_back("edge " + e.name + " lands outside every neighbouring copy");
      continue;
    }
    if (*landing != f.translation) {
      std::string via = "a corner copy";
      for (const auto& g : b.faces) {
        if (g.translation == *landing) via = "face " + g.name;
      }
      issues.push_back("edge " + e.name + " leaves through face " + f.name + " but enters the copy across " + via);
      continue;
    }
    auto partner = b.site_at(e.partner_cell - *landing, e.partner_role);
    const LatticeBond* bond = nullptr;
    for (const auto& bb : b.lattice.bonds) {
      if (e.leg == bb.name || e.leg == bb.name + "+" || e.leg == bb.name + "-") bond = &bb;
    }
    std::string back_leg = e.leg;
    if (bond && bond->role_a == bond->role_b) back_leg = bond->name + (e.leg.back() == '+' ? "-" : "+");
    auto it = by_site.find({*partner, back_leg});
    if (it == by_site.end()) {
      issues.push_back("edge " + e.name + " has no partner edge on the opposite face");
    } else if (b.outer[it->second].face != f.opposite) {
      issues.push_back("edge " + e.name + " re-enters through face " + b.faces[b.outer[it->second].face].name +
                       " instead of " + b.faces[f.opposite].name);
    }
  }
  for (const auto& f : b.faces) {
    if (f.edges.size() != b.faces[f.opposite].edges.size()) {
      issues.push_back("faces " + f.name + " and " + b.faces[f.opposite].name + " carry different edge counts");
    }
  }
  return issues;
}

// ---------------------------------------------------------------------------------------------
// Rotation

Cell rotate_cell(Cell c, int steps) {
  steps = ((steps % 3) + 3) % 3;
  for (int k = 0; k < steps; ++k) c = {-c[0] - c[1], c[0]};
  return c;
}

int rotate_role(int role, int steps) {
  Lattice lat = kagome_lattice();
  Vec2 c = triangle_centre(lat);
  Vec2 p = rotate_about(lat.role_offsets.at(role), c, 120.0 * steps);
  for (int r = 0; r < 3; ++r) {
    if (close(p, lat.role_offsets[r])) return r;
  }
  throw InvariantViolation("role does not map onto a role");
}

std::map<std::string, std::string> rotation_leg_map(const Lattice& lattice, int steps) {
  std::map<std::string, std::string> out;
  Vec2 origin;
  for (int r = 0; r < static_cast<int>(lattice.roles.size()); ++r) {
    int r2 = rotate_role(r, steps);
    auto dst = lattice.legs(r2);
    for (const auto& l : lattice.legs(r)) {
      Vec2 d = rotate_about(l.direction, origin, 120.0 * steps);
      auto it = std::find_if(dst.begin(), dst.end(), [&](const LatticeLeg& m) { return close(m.direction, d); });
      if (it == dst.end()) throw InvariantViolation("leg " + l.name + " has no rotated image");
      auto [pos, fresh] = out.emplace(l.name, it->name);
      if (!fresh && pos->second != it->name) throw InvariantViolation("inconsistent bond image for " + l.name);
    }
  }
  return out;
}

std::vector<std::size_t> rotation_site_map(const Block& b, int steps) {
  check_hexagon(b);
  Vec2 c = triangle_centre(b.lattice);
  std::vector<std::size_t> out(b.sites.size());
  for (std::size_t i = 0; i < b.sites.size(); ++i) {
    Vec2 p = rotate_about(b.sites[i].position, c, 120.0 * steps);
    auto s = b.site_at(rotate_cell(b.sites[i].cell, steps), rotate_role(b.sites[i].role, steps));
    if (!s || !close(b.sites[*s].position, p)) throw InvariantViolation("block is not invariant under rotation");
    out[i] = *s;
  }
  return out;
}

UnitCell rotate_unit_cell(const Lattice& lattice, const UnitCell& uc, int steps) {
  auto names = rotation_leg_map(lattice, steps);
  UnitCell out;
  out.tensors.resize(uc.tensors.size());
  for (int r = 0; r < static_cast<int>(uc.tensors.size()); ++r) {
    int r2 = rotate_role(r, steps);
    std::vector<LegId> order{"p"};
    for (const auto& l : lattice.legs(r2)) order.push_back(l.name);
    out.tensors[r2] = uc.tensors[r].renamed(names).permuted(order);
  }
  return out;
}

Block rotate_block(const Block& b, int angle) {
  check_hexagon(b);
  if (angle % 120 != 0) throw UnsupportedShape("rotation angle must be a multiple of 120 degrees");
  int steps = ((angle / 120) % 3 + 3) % 3;
  Block out = b;
  out.unit_cell = rotate_unit_cell(b.lattice, b.unit_cell, steps);
  out.orientation = (b.orientation + steps) % 3;
  return out;
}

Block with_unit_cell(const Block& b, UnitCell uc) {
  uc.validate(b.lattice);
  Block out = b;
  out.unit_cell = std::move(uc);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Networks

Tensor braket(const Tensor& ket, const LegId& phys) {
  std::map<LegId, LegId> star;
  std::vector<LegId> others;
  for (const auto& l : ket.legs()) {
    if (l == phys) continue;
    others.push_back(l);
    star[l] = l + "*";
  }
  Tensor t = contract(ket, {phys}, ket.conj().renamed(star), {phys});
  for (const auto& l : others) t = fuse_legs(t, {l, l + "*"}, l);
  return t;
}

Tensor braket_open(const Tensor& ket, const LegId& phys) {
  std::map<LegId, LegId> star;
  std::vector<LegId> others;
  for (const auto& l : ket.legs()) {
    star[l] = l + "*";
    if (l != phys) others.push_back(l);
  }
  Tensor t = contract(ket, {}, ket.conj().renamed(star), {});
  for (const auto& l : others) t = fuse_legs(t, {l, l + "*"}, l);
  return t;
}

std::vector<std::size_t> face_partner_ranks(const Block& b, std::size_t f) {
  const BlockFace& face = b.faces.at(f);
  std::map<std::pair<std::size_t, std::string>, std::size_t> by_site;
  for (std::size_t e = 0; e < b.outer.size(); ++e) by_site[{b.outer[e].site, b.outer[e].leg}] = e;
  std::vector<std::size_t> out;
  for (std::size_t e : face.edges) {
    const OuterEdge& oe = b.outer[e];
    auto partner = b.site_at(oe.partner_cell - face.translation, oe.partner_role);
    if (!partner) throw InvalidGeometry("edge " + oe.name + " has no partner site");
    std::string back = oe.leg;
    if (back.ends_with("+")) {
      back.back() = '-';
    } else if (back.ends_with("-")) {
      back.back() = '+';
    }
    auto it = by_site.find({*partner, back});
    if (it == by_site.end() || b.outer[it->second].face != face.opposite) {
      throw InvalidGeometry("edge " + oe.name + " does not re-enter through the opposite face");
    }
    out.push_back(b.outer[it->second].rank);
  }
  return out;
}

std::string site_node(std::size_t i) { return "s" + std::to_string(i); }

std::string message_node(const Block& b, std::size_t face, std::size_t rank) {
  return "M-" + b.faces.at(face).name + "-" + std::to_string(rank);
}

BlockNetwork block_network(const Block& b, const std::vector<MPS>& messages, const std::vector<std::size_t>& open_sites) {
  if (messages.size() != b.faces.size()) throw ShapeMismatch("one message slot per face required");
  BlockNetwork net;
  std::set<std::size_t> open(open_sites.begin(), open_sites.end());
  for (std::size_t i = 0; i < b.sites.size(); ++i) {
    Tensor ket = b.site_tensor(i);
    net.tn.add_node(site_node(i), open.count(i) ? braket_open(ket) : braket(ket));
    net.positions[site_node(i)] = b.sites[i].position;
  }
  for (const auto& e : b.inner) net.tn.connect({site_node(e.a), e.name}, {site_node(e.b), e.name});
  for (std::size_t f = 0; f < b.faces.size(); ++f) {
    const MPS& m = messages[f];
    if (m.empty()) continue;
    const auto& edges = b.faces[f].edges;
    const std::size_t n = edges.size();
    if (m.length() != n) {
      throw ShapeMismatch("message on face " + b.faces[f].name + " has " + std::to_string(m.length()) +
                          " sites, face has " + std::to_string(n) + " edges");
    }
    for (std::size_t k = 0; k < n; ++k) {
      const OuterEdge& e = b.outer[edges[k]];
      const Tensor& s = m.site(k);
      std::vector<LegId> legs;
      std::vector<std::size_t> dims;
      if (k + 1 < n) {
        legs.push_back("r");
        dims.push_back(s.dim("r"));
      }
      legs.push_back("p");
      dims.push_back(s.dim("p"));
      if (k > 0) {
        legs.push_back("l");
        dims.push_back(s.dim("l"));
      }
      // Stored (l, p, r); the dropped end legs have extent 1.
      Tensor node(legs, dims);
      Tensor src = s.permuted({"r", "p", "l"});
      std::copy(src.data().begin(), src.data().end(), node.data().begin());
      if (k == 0) node.set_scale_exp(m.scale_exp());
      NodeId id = message_node(b, f, k);
      net.tn.add_node(id, std::move(node));
      Vec2 inward = b.sites[e.site].position - e.midpoint;
      net.positions[id] = e.midpoint - 0.5 * inward;
      net.tn.connect({id, "p"}, {site_node(e.site), e.name});
      if (k > 0) net.tn.connect({message_node(b, f, k - 1), "r"}, {id, "l"});
    }
  }
  return net;
}

// ---------------------------------------------------------------------------------------------
// Plans

namespace {

struct NodeMap {
  const Block* block = nullptr;
  std::vector<std::size_t> sites;
  int steps = 0;

  std::size_t face(std::size_t f) const { return (f + 2 * steps) % block->faces.size(); }

  NodeId node(const NodeId& id) const {
    if (id.starts_with("M-")) {
      auto dash = id.rfind('-');
      std::string fname = id.substr(2, dash - 2);
      return message_node(*block, face(block->face_index(fname)), std::stoul(id.substr(dash + 1)));
    }
    return site_node(sites.at(std::stoul(id.substr(1))));
  }

  LegRef leg(const LegRef& r) const {
    LegRef out{node(r.node), r.leg};
    if (r.node.starts_with("M-")) return out;
    std::size_t i = std::stoul(r.node.substr(1));
    std::string role_leg = block->role_leg_of(i, r.leg);
    auto names = rotation_leg_map(block->lattice, steps);
    out.leg = block->edge_of(sites[i], names.at(role_leg));
    return out;
  }

  SweepPlan plan(const SweepPlan& p) const {
    SweepPlan q;
    for (const auto& id : p.swallow_order) q.swallow_order.push_back(node(id));
    for (const auto& l : p.emit_legs) q.emit_legs.push_back(leg(l));
    return q;
  }
};

Block skeleton(const Block& b) {
  Block s = b;
  std::vector<std::vector<Complex>> states(b.lattice.roles.size(), std::vector<Complex>{1.0});
  s.unit_cell = UnitCell::product(b.lattice, states);
  return s;
}

std::vector<MPS> skeleton_messages(const Block& b, std::optional<std::size_t> skip) {
  std::vector<MPS> out(b.faces.size());
  for (std::size_t f = 0; f < b.faces.size(); ++f) {
    if (skip && *skip == f) continue;
    out[f] = MPS::product(std::vector<std::vector<Complex>>(b.faces[f].edges.size(), std::vector<Complex>{1.0}));
  }
  return out;
}

SweepPlan outgoing_plan(const Block& b, const Block& skel, std::size_t f) {
  BlockNetwork net = block_network(skel, skeleton_messages(b, f));
  Vec2 u{std::cos(b.faces[f].angle * std::numbers::pi / 180.0), std::sin(b.faces[f].angle * std::numbers::pi / 180.0)};
  std::vector<NodeId> nodes = net.tn.node_ids();
  auto prio = [&](const NodeId& id) { return dot(net.positions.at(id), u); };
  SweepPlan plan = greedy_plan(net.tn, nodes, message_node(b, b.faces[f].opposite, 0), prio);
  for (std::size_t e : b.faces[f].edges) plan.emit_legs.push_back({site_node(b.outer[e].site), b.outer[e].name});
  auto issues = validate_plan(net.tn, plan);
  for (const auto& is : issues) {
    if (!is.warning) throw InvalidPlan("outgoing plan for face " + b.faces[f].name + ": " + is.message);
  }
  return plan;
}

CorePlan core_plan(const Block& b, const Block& skel) {
  CorePlan cp;
  const std::array<Cell, 3> core_cells{Cell{0, 0}, Cell{0, 1}, Cell{-1, 1}};
  for (std::size_t k = 0; k < 3; ++k) {
    auto it = std::find(b.cells.begin(), b.cells.end(), core_cells[k]);
    if (it == b.cells.end()) throw InvalidGeometry("core triangle outside block");
    cp.core_triangles[k] = static_cast<std::size_t>(it - b.cells.begin());
    for (std::size_t s : b.triangles[cp.core_triangles[k]]) cp.core_sites.push_back(s);
  }
  cp.down_triangle = {*b.site_at({0, 0}, kRoleU), *b.site_at({-1, 1}, kRoleR), *b.site_at({0, 1}, kRoleL)};

  BlockNetwork net = block_network(skel, skeleton_messages(b, std::nullopt));
  Vec2 centroid;
  for (std::size_t s : cp.core_sites) centroid = centroid + b.sites[s].position;
  centroid = (1.0 / double(cp.core_sites.size())) * centroid;
  std::set<NodeId> core;
  for (std::size_t s : cp.core_sites) core.insert(site_node(s));
  std::vector<NodeId> lower;
  std::vector<NodeId> upper;
  for (const auto& id : net.tn.node_ids()) {
    if (core.count(id)) continue;
    (net.positions.at(id).y < centroid.y ? lower : upper).push_back(id);
  }
  const std::size_t down = 0;
  const std::size_t up = b.faces[down].opposite;
  // The upper bubble keeps only the part connected to its start; stray pieces join the lower one.
  {
    std::set<NodeId> pool(upper.begin(), upper.end());
    std::set<NodeId> reach{message_node(b, up, 0)};
    std::vector<NodeId> stack{message_node(b, up, 0)};
    while (!stack.empty()) {
      NodeId v = stack.back();
      stack.pop_back();
      for (const auto& l : net.tn.node(v).legs()) {
        auto p = net.tn.partner({v, l});
        if (p && pool.count(p->node) && reach.insert(p->node).second) stack.push_back(p->node);
      }
    }
    std::vector<NodeId> kept;
    for (const auto& id : upper) (reach.count(id) ? kept : lower).push_back(id);
    upper = kept;
  }
  auto y = [&](const NodeId& id) { return net.positions.at(id).y; };
  cp.lower = greedy_plan(net.tn, lower, message_node(b, down, 0), y);
  cp.upper = greedy_plan(net.tn, upper, message_node(b, up, 0), [&](const NodeId& id) { return -y(id); });
  for (const SweepPlan* p : {&cp.lower, &cp.upper}) {
    for (const auto& is : validate_plan(net.tn, *p)) {
      if (!is.warning) throw InvalidPlan("core bubble: " + is.message);
    }
  }
  return cp;
}

}  // namespace

std::shared_ptr<const BlockPlans> make_block_plans(const Block& b) {
  auto plans = std::make_shared<BlockPlans>();
  Block skel = skeleton(b);
  const std::size_t nf = b.faces.size();
  plans->outgoing.resize(nf);
  if (b.shape == BlockShape::Hexagon) {
    for (std::size_t f : {std::size_t{0}, std::size_t{1}}) plans->outgoing[f] = outgoing_plan(b, skel, f);
    for (int steps : {1, 2}) {
      NodeMap map{&b, rotation_site_map(b, steps), steps};
      for (std::size_t f : {std::size_t{0}, std::size_t{1}}) plans->outgoing[map.face(f)] = map.plan(plans->outgoing[f]);
    }
    CorePlan base = core_plan(b, skel);
    plans->cores.push_back(base);
    for (int steps : {1, 2}) {
      NodeMap map{&b, rotation_site_map(b, steps), steps};
      CorePlan cp;
      for (std::size_t s : base.core_sites) cp.core_sites.push_back(map.sites[s]);
      for (std::size_t k = 0; k < 3; ++k) {
        Cell c = rotate_cell(b.cells[base.core_triangles[k]], steps);
        cp.core_triangles[k] = static_cast<std::size_t>(std::find(b.cells.begin(), b.cells.end(), c) - b.cells.begin());
      }
      for (std::size_t s : base.down_triangle) cp.down_triangle.push_back(map.sites[s]);
      cp.lower = map.plan(base.lower);
      cp.upper = map.plan(base.upper);
      plans->cores.push_back(cp);
    }
  } else {
    for (std::size_t f = 0; f < nf; ++f) plans->outgoing[f] = outgoing_plan(b, skel, f);
  }
  return plans;
}

}  // namespace kbp
