#include "kbp/lattice.hpp"

#include <algorithm>
#include <numbers>

#include "kbp/error.hpp"

namespace kbp {

double angle_deg(Vec2 v) {
  double a = std::atan2(v.y, v.x) * 180.0 / std::numbers::pi;
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a -= 360.0;
  return a;
}

double angle_diff(double a, double b) {
  double d = std::fmod(a - b, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

Vec2 Lattice::position(Cell c, int role) const { return cell_origin(c) + role_offsets.at(role); }

std::vector<LatticeLeg> Lattice::legs(int role) const {
  std::vector<LatticeLeg> out;
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    const auto& bond = bonds[b];
    bool loop = bond.role_a == bond.role_b;
    if (bond.role_a == role) {
      LatticeLeg l{b, true, loop ? bond.name + "+" : bond.name, bond.offset, bond.role_b, {}};
      l.direction = position(bond.offset, bond.role_b) - position({0, 0}, role);
      out.push_back(l);
    }
    if (bond.role_b == role) {
      LatticeLeg l{b, false, loop ? bond.name + "-" : bond.name, -bond.offset, bond.role_a, {}};
      l.direction = position(-bond.offset, bond.role_a) - position({0, 0}, role);
      out.push_back(l);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const LatticeLeg& a, const LatticeLeg& b) { return angle_deg(a.direction) < angle_deg(b.direction); });
  return out;
}

std::size_t Lattice::bond_index(const std::string& bond_name) const {
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    if (bonds[b].name == bond_name) return b;
  }
  throw UnknownEdge("no bond '" + bond_name + "' in lattice " + name);
}

const std::vector<std::string>& kagome_bonds() {
  static const std::vector<std::string> names{"in_UL", "in_UR", "in_LR", "ex_RL", "ex_UL", "ex_UR"};
  return names;
}

Lattice kagome_lattice() {
  const double h = std::sqrt(3.0) / 2.0;
  Lattice k;
  k.name = "kagome";
  k.roles = {"U", "L", "R"};
  k.a1 = {2.0, 0.0};
  k.a2 = {1.0, 2.0 * h};
  k.role_offsets = {{0.5, h}, {0.0, 0.0}, {1.0, 0.0}};
  k.bonds = {{"in_UL", kRoleU, kRoleL, {0, 0}},  {"in_UR", kRoleU, kRoleR, {0, 0}},
             {"in_LR", kRoleL, kRoleR, {0, 0}},  {"ex_RL", kRoleR, kRoleL, {1, 0}},
             {"ex_UL", kRoleU, kRoleL, {0, 1}},  {"ex_UR", kRoleU, kRoleR, {-1, 1}}};
  return k;
}

Lattice kagome_parallelogram_lattice() {
  const double h = std::sqrt(3.0) / 2.0;
  Lattice k;
  k.name = "kagome-parallelogram";
  k.roles = {"U", "L", "R"};
  k.a1 = {2.0, 0.0};
  k.a2 = {-1.0, 2.0 * h};
  k.role_offsets = {{0.5, h}, {2.0, 0.0}, {1.0, 0.0}};
  k.bonds = {{"in_UL", kRoleU, kRoleL, {-1, 0}}, {"in_UR", kRoleU, kRoleR, {0, 0}},
             {"in_LR", kRoleL, kRoleR, {1, 0}},  {"ex_RL", kRoleR, kRoleL, {0, 0}},
             {"ex_UL", kRoleU, kRoleL, {0, 1}},  {"ex_UR", kRoleU, kRoleR, {0, 1}}};
  return k;
}

Lattice triangular_lattice() {
  Lattice t;
  t.name = "triangular";
  t.roles = {"A"};
  t.a1 = {1.0, 0.0};
  t.a2 = {0.5, std::sqrt(3.0) / 2.0};
  t.role_offsets = {{0.0, 0.0}};
  t.bonds = {{"e1", 0, 0, {1, 0}}, {"e2", 0, 0, {0, 1}}, {"e3", 0, 0, {-1, 1}}};
  return t;
}

}  // namespace kbp
