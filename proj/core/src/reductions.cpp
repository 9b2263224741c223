#include "kbp/reductions.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kbp/error.hpp"

namespace kbp {

namespace {

std::string bond_of_leg(const Lattice& lattice, int role, const std::string& leg) {
  for (const auto& l : lattice.legs(role)) {
    if (l.name == leg) return lattice.bonds[l.bond].name;
  }
  throw UnknownLeg("role " + lattice.roles.at(role) + " has no leg " + leg);
}

bool bond_first_role(const Lattice& lattice, int role, const std::string& leg) {
  for (const auto& l : lattice.legs(role)) {
    if (l.name == leg) return l.at_a;
  }
  throw UnknownLeg("role " + lattice.roles.at(role) + " has no leg " + leg);
}

std::string role_leg(const RegionTN& r, std::size_t site, const std::string& edge) {
  const BlockSite& s = r.info.at(site);
  for (std::size_t k = 0; k < s.edges.size(); ++k) {
    if (s.edges[k] == edge) return s.role_legs[k];
  }
  throw UnknownEdge("site " + std::to_string(site) + " has no edge " + edge);
}

// Region sites as braket nodes, wired along the edges they share.
TNGraph region_graph(const RegionTN& r, const std::vector<std::size_t>& open_sites) {
  TNGraph g;
  std::set<std::size_t> open(open_sites.begin(), open_sites.end());
  std::map<std::string, std::size_t> owner;
  for (std::size_t s : r.sites) {
    const Tensor& ket = r.kets.at(s);
    g.add_node(site_node(s), open.count(s) ? braket_open(ket) : braket(ket));
    for (const auto& e : r.info.at(s).edges) {
      auto it = owner.find(e);
      if (it == owner.end()) {
        owner[e] = s;
      } else {
        g.connect({site_node(it->second), e}, {site_node(s), e});
      }
    }
  }
  return g;
}

std::size_t ring_hits(const RegionTN& r, std::size_t s) {
  std::size_t n = 0;
  for (const auto& l : r.env.legs) n += l.node == site_node(s);
  return n;
}

void drop_site(RegionTN& r, std::size_t s) {
  r.sites.erase(std::find(r.sites.begin(), r.sites.end(), s));
  r.kets.erase(s);
  r.info.erase(s);
}

// Absorbs every site not in `keep`, preferring sites with the most ring legs.
void absorb_all_but(RegionTN& r, const std::set<std::size_t>& keep) {
  TNGraph g = region_graph(r, {});
  for (;;) {
    std::vector<std::size_t> todo;
    for (std::size_t s : r.sites) {
      if (!keep.count(s)) todo.push_back(s);
    }
    if (todo.empty()) return;
    std::size_t best = 0;
    std::size_t best_hits = 0;
    bool found = false;
    for (std::size_t s : todo) {
      if (!ring_absorbable(r.env, g, site_node(s))) continue;
      std::size_t h = ring_hits(r, s);
      if (!found || h > best_hits) {
        best = s;
        best_hits = h;
        found = true;
      }
    }
    if (!found) throw InvalidGeometry("no region site touches the ring in one contiguous run");
    absorb_into_ring(r.env, g, site_node(best));
    drop_site(r, best);
  }
}

Tensor ring_node(const PeriodicMPS& ring, std::size_t k) {
  Tensor t = ring.site(k);
  if (k == 0) t.set_scale_exp(t.scale_exp() + ring.scale_exp());
  return t;
}

}  // namespace

Mode mode_from_string(const std::string& s) {
  if (s == "A") return Mode::A;
  if (s == "B") return Mode::B;
  if (s == "C") return Mode::C;
  throw UnknownMode("'" + s + "' (expected A, B or C)");
}

std::string to_string(Mode m) {
  switch (m) {
    case Mode::A: return "A";
    case Mode::B: return "B";
    case Mode::C: return "C";
  }
  return "?";
}

CoreTN block_to_core(const Block& b, const std::vector<MPS>& messages, std::size_t chi, std::size_t core) {
  if (!b.plans || b.plans->cores.empty()) throw UnsupportedShape("block has no core plan");
  if (core >= b.plans->cores.size()) throw InvalidPlan("core index " + std::to_string(core) + " out of range");
  if (messages.size() != b.faces.size()) throw ShapeMismatch("one message per face required");
  for (std::size_t f = 0; f < messages.size(); ++f) {
    if (messages[f].empty()) throw ShapeMismatch("face " + b.faces[f].name + " has no message");
  }
  const CorePlan& cp = b.plans->cores[core];
  BlockNetwork net = block_network(b, messages);
  BoundaryResult lo = boundary_contract(net.tn, cp.lower, chi);
  BoundaryResult up = boundary_contract(net.tn, cp.upper, chi);

  std::set<NodeId> core_nodes;
  for (std::size_t s : cp.core_sites) core_nodes.insert(site_node(s));
  const std::size_t nl = lo.legs.size();
  const std::size_t nu = up.legs.size();
  auto joined = [](const FrontierLeg& x, const FrontierLeg& y) { return x.outer && *x.outer == y.inner; };
  std::size_t head = 0;
  while (head < nl && head < nu && joined(lo.legs[head], up.legs[nu - 1 - head])) ++head;
  std::size_t tail = 0;
  while (head + tail < nl && head + tail < nu && joined(lo.legs[nl - 1 - tail], up.legs[tail])) ++tail;

  std::vector<LegRef> legs;
  auto take = [&](const FrontierLeg& l) {
    if (!l.outer || !core_nodes.count(l.outer->node)) {
      throw InvalidPlan("bubbles do not meet along one seam at leg " + to_string(l.inner));
    }
    legs.push_back(*l.outer);
  };
  for (std::size_t i = head; i < nl - tail; ++i) take(lo.legs[i]);
  for (std::size_t i = tail; i < nu - head; ++i) take(up.legs[i]);

  CoreTN c;
  c.lattice = b.lattice;
  // Both bubbles run counter-clockwise around themselves, hence clockwise around the core.
  c.env.ring = zipper_close(lo.mps, up.mps, head, tail).reversed();
  std::reverse(legs.begin(), legs.end());
  c.env.legs = std::move(legs);
  c.truncation_error = std::hypot(lo.truncation_error, up.truncation_error);
  c.sites = cp.core_sites;
  for (std::size_t s : c.sites) {
    c.kets[s] = b.site_tensor(s);
    c.info[s] = b.sites[s];
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const auto& t = b.triangles[cp.core_triangles[k]];
    c.triangles[k] = {t[0], t[1], t[2]};
  }
  std::copy(cp.down_triangle.begin(), cp.down_triangle.end(), c.down_triangle.begin());
  return c;
}

ModeTN core_to_mode(const CoreTN& core, Mode mode) {
  ModeTN m;
  static_cast<RegionTN&>(m) = core;
  m.mode = mode;
  std::set<std::size_t> keep(core.down_triangle.begin(), core.down_triangle.end());
  const auto& t = core.triangles.at(static_cast<std::size_t>(mode));
  keep.insert(t.begin(), t.end());
  absorb_all_but(m, keep);
  return m;
}

std::vector<RegionBond> region_bonds(const RegionTN& r) {
  std::vector<RegionBond> out;
  std::map<std::string, std::size_t> owner;
  for (std::size_t s : r.sites) {
    for (const auto& e : r.info.at(s).edges) {
      auto it = owner.find(e);
      if (it == owner.end()) {
        owner[e] = s;
        continue;
      }
      std::size_t x = it->second;
      std::string leg = role_leg(r, s, e);
      int role = r.info.at(s).role;
      RegionBond rb{bond_of_leg(r.lattice, role, leg), e, x, s};
      if (bond_first_role(r.lattice, role, leg)) std::swap(rb.a, rb.b);
      out.push_back(rb);
    }
  }
  return out;
}

EdgeTN mode_to_edge(const ModeTN& mode, const std::string& edge) {
  std::vector<RegionBond> hits;
  for (const auto& rb : region_bonds(mode)) {
    if (rb.bond == edge || rb.edge == edge) hits.push_back(rb);
  }
  if (hits.empty()) throw UnknownEdge("'" + edge + "' is not a bond of mode " + to_string(mode.mode));
  if (hits.size() > 1) throw UnknownEdge("'" + edge + "' occurs more than once in mode " + to_string(mode.mode));
  return region_to_edge(mode, hits[0].a, hits[0].b);
}

EdgeTN region_to_edge(const RegionTN& region, std::size_t i, std::size_t j) {
  if (!region.kets.count(i) || !region.kets.count(j)) throw UnknownEdge("sites not in region");
  RegionTN r = region;
  absorb_all_but(r, {i, j});

  std::vector<std::string> shared;
  for (const auto& e : r.info.at(i).edges) {
    const auto& ej = r.info.at(j).edges;
    if (std::find(ej.begin(), ej.end(), e) != ej.end()) shared.push_back(e);
  }
  if (shared.size() != 1) throw UnknownEdge("sites " + std::to_string(i) + " and " + std::to_string(j) + " do not share exactly one edge");

  const std::size_t n = r.env.legs.size();
  const NodeId ni = site_node(i);
  std::size_t start = n;
  for (std::size_t k = 0; k < n; ++k) {
    if (r.env.legs[k].node == ni && r.env.legs[(k + n - 1) % n].node != ni) start = k;
  }
  if (start == n) throw InvalidGeometry("ring does not separate the two edge sites");

  EdgeTN e;
  e.site_i = i;
  e.site_j = j;
  e.role_i = r.info.at(i).role;
  e.role_j = r.info.at(j).role;
  e.bond_i = role_leg(r, i, shared[0]);
  e.bond_j = role_leg(r, j, shared[0]);
  e.ring = r.env.ring.rotated(start);
  for (std::size_t k = 0; k < n; ++k) {
    const LegRef& l = r.env.legs[(start + k) % n];
    std::size_t s = l.node == ni ? i : j;
    if (s == i && k != e.n_i) throw InvalidGeometry("edge ring legs of site i are not contiguous");
    if (s == i) ++e.n_i;
    e.ring_legs.push_back(role_leg(r, s, l.leg));
  }
  auto rename = [&](std::size_t s) {
    std::map<LegId, LegId> m;
    const BlockSite& info = r.info.at(s);
    for (std::size_t k = 0; k < info.edges.size(); ++k) m[info.edges[k]] = info.role_legs[k];
    return r.kets.at(s).renamed(m);
  };
  e.ket_i = rename(i);
  e.ket_j = rename(j);
  return e;
}

TNGraph region_network(const RegionTN& region, const std::vector<std::size_t>& open_sites) {
  TNGraph g = region_graph(region, open_sites);
  const std::size_t n = region.env.legs.size();
  if (n < 2) throw InvalidGeometry("ring needs at least two sites");
  for (std::size_t k = 0; k < n; ++k) g.add_node("e" + std::to_string(k), ring_node(region.env.ring, k));
  for (std::size_t k = 0; k < n; ++k) {
    NodeId id = "e" + std::to_string(k);
    g.connect({id, "p"}, region.env.legs[k]);
    g.connect({id, "r"}, {"e" + std::to_string((k + 1) % n), "l"});
  }
  return g;
}

TNGraph edge_network(const EdgeTN& e, bool open_physical) {
  TNGraph g;
  g.add_node("i", open_physical ? braket_open(e.ket_i) : braket(e.ket_i));
  g.add_node("j", open_physical ? braket_open(e.ket_j) : braket(e.ket_j));
  g.connect({"i", e.bond_i}, {"j", e.bond_j});
  const std::size_t n = e.ring_legs.size();
  for (std::size_t k = 0; k < n; ++k) g.add_node("e" + std::to_string(k), ring_node(e.ring, k));
  for (std::size_t k = 0; k < n; ++k) {
    NodeId id = "e" + std::to_string(k);
    g.connect({id, "p"}, {k < e.n_i ? "i" : "j", e.ring_legs[k]});
    g.connect({id, "r"}, {"e" + std::to_string((k + 1) % n), "l"});
  }
  return g;
}

EdgeTN identity_edge(const Tensor& ket_i, const Tensor& ket_j, const LegId& bond_i, const LegId& bond_j) {
  EdgeTN e;
  e.ket_i = ket_i;
  e.ket_j = ket_j;
  e.bond_i = bond_i;
  e.bond_j = bond_j;
  std::vector<Tensor> sites;
  auto add_legs = [&](const Tensor& ket, const LegId& bond) {
    const auto& legs = ket.legs();
    std::vector<LegId> cyc;
    for (const auto& l : legs) {
      if (l != "p") cyc.push_back(l);
    }
    auto at = std::find(cyc.begin(), cyc.end(), bond);
    if (at == cyc.end()) throw UnknownLeg("ket has no leg " + bond);
    std::size_t b = static_cast<std::size_t>(at - cyc.begin());
    for (std::size_t k = 1; k < cyc.size(); ++k) {
      const LegId& l = cyc[(b + k) % cyc.size()];
      std::size_t D = ket.dim(l);
      Tensor s({"l", "p", "r"}, {1, D * D, 1});
      for (std::size_t x = 0; x < D; ++x) s.at({0, x * D + x, 0}) = 1.0;
      sites.push_back(std::move(s));
      e.ring_legs.push_back(l);
    }
  };
  add_legs(ket_i, bond_i);
  e.n_i = e.ring_legs.size();
  add_legs(ket_j, bond_j);
  e.ring = PeriodicMPS(std::move(sites));
  return e;
}

Tensor edge_environment(const EdgeTN& e) {
  Tensor t = e.ring.to_dense();
  std::map<LegId, LegId> m;
  for (std::size_t k = 0; k < e.ring_legs.size(); ++k) {
    m["p" + std::to_string(k)] = (k < e.n_i ? "i:" : "j:") + e.ring_legs[k];
  }
  return t.renamed(m);
}

}  // namespace kbp
