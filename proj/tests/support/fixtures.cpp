#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>

namespace kbp::testing {

Tensor brute_contract(const Tensor& a, const std::vector<LegId>& legs_a, const Tensor& b,
                      const std::vector<LegId>& legs_b) {
  std::vector<LegId> out_legs;
  std::vector<std::size_t> out_dims;
  for (std::size_t k = 0; k < a.rank(); ++k) {
    if (std::find(legs_a.begin(), legs_a.end(), a.legs()[k]) == legs_a.end()) {
      out_legs.push_back(a.legs()[k]);
      out_dims.push_back(a.dims()[k]);
    }
  }
  for (std::size_t k = 0; k < b.rank(); ++k) {
    if (std::find(legs_b.begin(), legs_b.end(), b.legs()[k]) == legs_b.end()) {
      out_legs.push_back(b.legs()[k]);
      out_dims.push_back(b.dims()[k]);
    }
  }
  std::vector<std::size_t> sum_dims;
  for (const auto& l : legs_a) sum_dims.push_back(a.dim(l));
  Tensor out(out_legs, out_dims);
  std::vector<std::size_t> oi(out_dims.size(), 0);
  for (std::size_t o = 0; o < out.size(); ++o) {
    std::size_t rem = o;
    for (std::size_t k = out_dims.size(); k-- > 0;) {
      oi[k] = rem % out_dims[k];
      rem /= out_dims[k];
    }
    std::size_t total = 1;
    for (auto d : sum_dims) total *= d;
    Complex acc = 0.0;
    std::vector<std::size_t> si(sum_dims.size(), 0);
    for (std::size_t s = 0; s < total; ++s) {
      std::size_t r = s;
      for (std::size_t k = sum_dims.size(); k-- > 0;) {
        si[k] = r % sum_dims[k];
        r /= sum_dims[k];
      }
      std::vector<std::size_t> ia(a.rank()), ib(b.rank());
      std::size_t free = 0;
      for (std::size_t k = 0; k < a.rank(); ++k) {
        auto it = std::find(legs_a.begin(), legs_a.end(), a.legs()[k]);
        ia[k] = it == legs_a.end() ? oi[free++] : si[static_cast<std::size_t>(it - legs_a.begin())];
      }
      for (std::size_t k = 0; k < b.rank(); ++k) {
        auto it = std::find(legs_b.begin(), legs_b.end(), b.legs()[k]);
        ib[k] = it == legs_b.end() ? oi[free++] : si[static_cast<std::size_t>(it - legs_b.begin())];
      }
      acc += a.at(std::span<const std::size_t>(ia)) * b.at(std::span<const std::size_t>(ib));
    }
    out.data()[o] = acc * std::pow(10.0, static_cast<double>(a.scale_exp() + b.scale_exp()));
  }
  return out;
}

double relative_difference(const Tensor& a, const Tensor& b) {
  Tensor fa = a.with_scale_folded();
  Tensor fb = b.permuted(a.legs()).with_scale_folded();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    num += std::norm(fa.data()[i] - fb.data()[i]);
    den += std::norm(fb.data()[i]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

Tensor braket_of(const Tensor& ket) {
  std::map<LegId, LegId> star;
  for (const auto& l : ket.legs()) {
    if (l != "p") star[l] = l + "*";
  }
  Tensor t = contract(ket, {"p"}, ket.conj().renamed(star), {"p"});
  for (const auto& l : ket.legs()) {
    if (l != "p") t = fuse_legs(t, {l, l + "*"}, l);
  }
  std::vector<LegId> order;
  for (const auto& l : ket.legs()) {
    if (l != "p") order.push_back(l);
  }
  return t.permuted(order);
}

std::string grid_id(std::size_t r, std::size_t c) {
  return "r" + std::to_string(r) + "c" + std::to_string(c);
}

TNGraph square_grid(std::size_t rows, std::size_t cols, std::size_t bond, std::mt19937_64& rng, bool braket) {
  TNGraph tn;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::vector<LegId> legs;
      if (c + 1 < cols) legs.push_back("E");
      if (r + 1 < rows) legs.push_back("N");
      if (c > 0) legs.push_back("W");
      if (r > 0) legs.push_back("S");
      if (braket) {
        std::vector<LegId> kl{"p"};
        std::vector<std::size_t> kd{2};
        for (const auto& l : legs) {
          kl.push_back(l);
          kd.push_back(bond);
        }
        tn.add_node(grid_id(r, c), braket_of(Tensor::random(kl, kd, rng)));
      } else {
        tn.add_node(grid_id(r, c), Tensor::random(legs, std::vector<std::size_t>(legs.size(), bond), rng));
      }
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) tn.connect({grid_id(r, c), "E"}, {grid_id(r, c + 1), "W"});
      if (r + 1 < rows) tn.connect({grid_id(r, c), "N"}, {grid_id(r + 1, c), "S"});
    }
  }
  return tn;
}

SweepPlan row_major_plan(std::size_t rows, std::size_t cols) {
  SweepPlan p;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) p.swallow_order.push_back(grid_id(r, c));
  return p;
}

TNGraph random_tree(std::size_t n, std::size_t max_dim, std::mt19937_64& rng) {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);  // (neighbour, dim)
  std::uniform_int_distribution<std::size_t> dim(1, max_dim);
  for (std::size_t v = 1; v < n; ++v) {
    std::uniform_int_distribution<std::size_t> parent(0, v - 1);
    std::size_t p = parent(rng);
    std::size_t d = dim(rng);
    adj[v].push_back({p, d});
    adj[p].push_back({v, d});
  }
  TNGraph tn;
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<LegId> legs;
    std::vector<std::size_t> dims;
    for (auto [u, d] : adj[v]) {
      legs.push_back("to" + std::to_string(u));
      dims.push_back(d);
    }
    tn.add_node("n" + std::to_string(v), Tensor::random(legs, dims, rng));
  }
  for (std::size_t v = 0; v < n; ++v) {
    for (auto [u, d] : adj[v]) {
      if (u > v) tn.connect({"n" + std::to_string(v), "to" + std::to_string(u)}, {"n" + std::to_string(u), "to" + std::to_string(v)});
    }
  }
  return tn;
}

std::size_t tree_diameter(const TNGraph& tn) {
  std::map<NodeId, std::vector<NodeId>> adj;
  for (const auto& e : tn.edges()) {
    adj[e.a.node].push_back(e.b.node);
    adj[e.b.node].push_back(e.a.node);
  }
  std::size_t best = 0;
  for (const auto& s : tn.node_ids()) {
    std::map<NodeId, std::size_t> dist{{s, 0}};
    std::queue<NodeId> q;
    q.push(s);
    while (!q.empty()) {
      auto v = q.front();
      q.pop();
      best = std::max(best, dist[v]);
      for (const auto& u : adj[v]) {
        if (!dist.count(u)) {
          dist[u] = dist[v] + 1;
          q.push(u);
        }
      }
    }
  }
  return best;
}

Tensor exact_environment(const TNGraph& tn, const NodeId& node) {
  TNGraph rest;
  for (const auto& id : tn.node_ids()) {
    if (id != node) rest.add_node(id, tn.node(id));
  }
  for (const auto& e : tn.edges()) {
    if (e.a.node != node && e.b.node != node) rest.connect(e.a, e.b);
  }
  std::vector<LegRef> open;
  std::map<LegId, LegId> names;
  for (const auto& l : tn.node(node).legs()) {
    LegRef p = *tn.partner({node, l});
    open.push_back(p);
    names[exact_leg_name(p)] = l;
  }
  rest.set_open_legs(open);
  return contract_exact(rest).renamed(names);
}

double aligned_distance(const Tensor& a, const Tensor& b) {
  Tensor bb = b.permuted(a.legs());
  Complex c = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) c += std::conj(bb.data()[k]) * a.data()[k];
  double na = a.norm(), nb = bb.norm();
  Complex phase = std::abs(c) > 0.0 ? c / std::abs(c) : Complex(1.0);
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d2 += std::norm(a.data()[k] / na - phase * bb.data()[k] / nb);
  return std::sqrt(d2);
}

TNGraph braket_torus(std::size_t D, std::mt19937_64& rng, bool positive) {
  TNGraph tn;
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      Tensor ket = Tensor::random({"p", "E", "N", "W", "S"}, {2, D, D, D, D}, rng);
      if (positive) {
        for (auto& x : ket.data()) x = std::abs(x);
      }
      tn.add_node(grid_id(r, c), braket_of(ket));
    }
  for (std::size_t r = 0; r < 2; ++r) {
    tn.connect({grid_id(r, 0), "E"}, {grid_id(r, 1), "W"});
    tn.connect({grid_id(r, 1), "E"}, {grid_id(r, 0), "W"});
  }
  for (std::size_t c = 0; c < 2; ++c) {
    tn.connect({grid_id(0, c), "N"}, {grid_id(1, c), "S"});
    tn.connect({grid_id(1, c), "N"}, {grid_id(0, c), "S"});
  }
  return tn;
}

}  // namespace kbp::testing
