#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace kbp {

using Cell = std::array<int, 2>;

inline Cell operator+(Cell a, Cell b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Cell operator-(Cell a, Cell b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Cell operator-(Cell a) { return {-a[0], -a[1]}; }
inline Cell operator*(int k, Cell a) { return {k * a[0], k * a[1]}; }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// Angle in degrees, in [0, 360).
double angle_deg(Vec2 v);
// Signed difference a - b folded into (-180, 180].
double angle_diff(double a, double b);

// A bond joins role_a in cell c to role_b in cell c + offset.
struct LatticeBond {
  std::string name;
  int role_a = 0;
  int role_b = 0;
  Cell offset{0, 0};
};

// One end of a bond as seen from a site.
struct LatticeLeg {
  std::size_t bond = 0;
  bool at_a = true;
  std::string name;
  Cell partner_offset{0, 0};
  int partner_role = 0;
  Vec2 direction;
};

struct Lattice {
  std::string name;
  std::vector<std::string> roles;
  Vec2 a1;
  Vec2 a2;
  std::vector<Vec2> role_offsets;
  std::vector<LatticeBond> bonds;

  Vec2 position(Cell c, int role) const;
  Vec2 cell_origin(Cell c) const { return double(c[0]) * a1 + double(c[1]) * a2; }
  // Legs of a role sorted counter-clockwise by direction, starting from angle 0.
  std::vector<LatticeLeg> legs(int role) const;
  std::size_t bond_index(const std::string& bond_name) const;
};

// Kagome lattice with up-triangle cells; roles U, L, R and bonds
// in_UL, in_UR, in_LR (inside the up triangle) and ex_RL, ex_UL, ex_UR (down triangles).
Lattice kagome_lattice();
// Same lattice grouped as {U, R, L of the next cell}; primitive vectors a1 and a2 - a1.
Lattice kagome_parallelogram_lattice();
// Triangular lattice with a single role and bonds e1, e2, e3.
Lattice triangular_lattice();

inline constexpr int kRoleU = 0;
inline constexpr int kRoleL = 1;
inline constexpr int kRoleR = 2;

// The six kagome bond names in canonical order.
const std::vector<std::string>& kagome_bonds();

}  // namespace kbp
