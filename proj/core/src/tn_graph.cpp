#include "kbp/tn_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "kbp/error.hpp"

namespace kbp {

std::string to_string(const LegRef& r) { return r.node + ":" + r.leg; }

std::string exact_leg_name(const LegRef& r) { return to_string(r); }

// TNGraph ----------------------------------------------------------------------

void TNGraph::add_node(const NodeId& id, Tensor t) {
  if (index_.count(id)) throw NameCollision("node '" + id + "' already present");
  index_[id] = order_.size();
  order_.push_back(id);
  tensors_.push_back(std::move(t));
}

const Tensor& TNGraph::node(const NodeId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw InvalidPlan("unknown node '" + id + "'");
  return tensors_[it->second];
}

Tensor& TNGraph::mutable_node(const NodeId& id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw InvalidPlan("unknown node '" + id + "'");
  return tensors_[it->second];
}

void TNGraph::connect(const LegRef& a, const LegRef& b) {
  std::size_t da = node(a.node).dim(a.leg);
  std::size_t db = node(b.node).dim(b.leg);
  if (da != db) throw DimensionMismatch("edge " + to_string(a) + " -- " + to_string(b));
  if (partner_.count(a) || partner_.count(b)) {
    throw NameCollision("leg already connected in edge " + to_string(a) + " -- " + to_string(b));
  }
  if (a == b) throw NameCollision("self edge on " + to_string(a));
  partner_[a] = b;
  partner_[b] = a;
  edges_.push_back({a, b});
}

void TNGraph::set_open_legs(std::vector<LegRef> legs) { open_legs_ = std::move(legs); }

std::vector<LegRef> TNGraph::open_legs() const {
  if (open_legs_) return *open_legs_;
  std::vector<LegRef> out;
  for (std::size_t i = 0; i < order_.size(); ++i) {
    for (const auto& l : tensors_[i].legs()) {
      LegRef r{order_[i], l};
      if (!partner_.count(r)) out.push_back(r);
    }
  }
  return out;
}

std::optional<LegRef> TNGraph::partner(const LegRef& r) const {
  auto it = partner_.find(r);
  if (it == partner_.end()) return std::nullopt;
  return it->second;
}

void TNGraph::validate() const {
  std::set<LegRef> open;
  for (const auto& r : open_legs()) {
    node(r.node).position(r.leg);
    if (partner_.count(r)) throw InvalidPlan("open leg " + to_string(r) + " is also connected");
    if (!open.insert(r).second) throw InvalidPlan("open leg " + to_string(r) + " listed twice");
  }
  for (std::size_t i = 0; i < order_.size(); ++i) {
    for (const auto& l : tensors_[i].legs()) {
      LegRef r{order_[i], l};
      if (!partner_.count(r) && !open.count(r)) throw InvalidPlan("dangling leg " + to_string(r));
    }
  }
}

// Frontier bookkeeping ---------------------------------------------------------

namespace {

struct SwallowStep {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<LegId> connected;  // v legs matching frontier positions [begin, end)
  std::vector<LegId> emitted;    // v legs replacing them, in boundary order
};

// Order of v's leftover legs when v joins a boundary at `connected` (boundary order).
// `inside` marks a node enclosed by the boundary (ring absorption) rather than outside it.
std::vector<LegId> emitted_order(const std::vector<LegId>& cyclic, const std::vector<LegId>& connected,
                                 bool inside) {
  const std::size_t n = cyclic.size();
  const std::size_t k = connected.size();
  if (k == 0) return cyclic;
  auto pos = [&](const LegId& l) {
    return static_cast<std::size_t>(std::find(cyclic.begin(), cyclic.end(), l) - cyclic.begin());
  };
  const std::size_t i0 = pos(connected[0]);
  const bool forward = k >= 2 ? pos(connected[1]) == (i0 + 1) % n : inside;
  bool contiguous = true;
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t expect = forward ? (i0 + j) % n : (i0 + n - j) % n;
    contiguous = contiguous && pos(connected[j]) == expect;
  }
  std::vector<LegId> rest;
  if (!contiguous) {
    for (const auto& l : cyclic) {
      if (std::find(connected.begin(), connected.end(), l) == connected.end()) rest.push_back(l);
    }
    return rest;
  }
  const std::size_t start = forward ? (i0 + k) % n : (i0 + 1) % n;
  for (std::size_t j = 0; j < n - k; ++j) rest.push_back(cyclic[(start + j) % n]);
  if (forward) std::reverse(rest.begin(), rest.end());
  return rest;
}

std::optional<SwallowStep> plan_swallow(const TNGraph& tn, const std::vector<FrontierLeg>& frontier,
                                        bool started, const NodeId& v, std::string* why) {
  const Tensor& t = tn.node(v);
  SwallowStep step;
  if (!started) {
    step.emitted = t.legs();
    return step;
  }
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    if (frontier[i].outer && frontier[i].outer->node == v) hits.push_back(i);
  }
  if (hits.empty()) {
    if (why) *why = "node '" + v + "' is not connected to the frontier";
    return std::nullopt;
  }
  for (std::size_t j = 1; j < hits.size(); ++j) {
    if (hits[j] != hits[j - 1] + 1) {
      if (why) *why = "node '" + v + "' splits the frontier";
      return std::nullopt;
    }
  }
  step.begin = hits.front();
  step.end = hits.back() + 1;
  for (auto i : hits) step.connected.push_back(frontier[i].outer->leg);
  step.emitted = emitted_order(t.legs(), step.connected, false);
  return step;
}

void apply_step(const TNGraph& tn, std::vector<FrontierLeg>& frontier, const NodeId& v, const SwallowStep& s) {
  std::vector<FrontierLeg> mid;
  for (const auto& l : s.emitted) {
    LegRef r{v, l};
    mid.push_back({r, tn.partner(r)});
  }
  frontier.erase(frontier.begin() + static_cast<long>(s.begin), frontier.begin() + static_cast<long>(s.end));
  frontier.insert(frontier.begin() + static_cast<long>(s.begin), mid.begin(), mid.end());
}

std::string internal(const LegId& l) { return "#" + l; }

Tensor prefixed(const Tensor& t) {
  std::map<LegId, LegId> m;
  for (const auto& l : t.legs()) m[l] = internal(l);
  return t.renamed(m);
}

// Chain of (l,p,r) sites with a tracked orthogonality centre.
struct Chain {
  std::vector<Tensor> sites;
  long scale = 0;
  std::size_t center = 0;
  double err2 = 0.0;

  Tensor fold(Tensor t) {
    scale += t.scale_exp();
    t.set_scale_exp(0);
    return t;
  }

  void move_center(std::size_t target) {
    while (center < target) {
      auto [q, r] = qr_split(sites[center], {"l", "p"}, QrSide::Left, "k");
      sites[center] = q.renamed("k", "r");
      sites[center + 1] = fold(contract(r, {"r"}, sites[center + 1], {"l"}).renamed("k", "l"));
      ++center;
    }
    while (center > target) {
      auto [lf, q] = qr_split(sites[center], {"l"}, QrSide::Right, "k");
      sites[center] = q.renamed("k", "l");
      sites[center - 1] = fold(contract(sites[center - 1], {"r"}, lf, {"l"}).renamed("k", "r"));
      --center;
    }
  }

  // Merge sites [begin, end) into one tensor (l, f0..f{k-1}, r).
  Tensor merge(std::size_t begin, std::size_t end, std::size_t n) const {
    Tensor m = sites[begin % n].renamed("p", "f0");
    for (std::size_t i = begin + 1; i < end; ++i) {
      Tensor s = sites[i % n].renamed(std::map<LegId, LegId>{{"p", "f" + std::to_string(i - begin)}, {"l", "_l"}});
      m = contract(m, {"r"}, s, {"_l"});
    }
    return m;
  }

  // Splits M (l, xs..., r) into sites left to right, truncating every bond at chi.
  std::vector<Tensor> split(Tensor m, const std::vector<LegId>& xs, std::size_t chi) {
    std::vector<Tensor> out;
    for (std::size_t j = 0; j + 1 < xs.size(); ++j) {
      Decomposition d = svd_split(m, {"l", xs[j]}, chi, "k");
      double kept = 0.0;
      for (double s : d.singular_values) kept += s * s;
      double disc = d.truncation_error * d.truncation_error;
      if (kept + disc > 0.0) err2 += disc / (kept + disc);
      out.push_back(d.left.renamed(std::map<LegId, LegId>{{xs[j], "p"}, {"k", "r"}}).permuted({"l", "p", "r"}));
      m = fold(d.s_times_right().renamed("k", "l"));
    }
    out.push_back(fold(m.renamed(xs.back(), "p").permuted({"l", "p", "r"})));
    return out;
  }
};

Tensor with_boundary_legs(const Tensor& t) {
  std::vector<LegId> legs{"l"};
  std::vector<std::size_t> dims{1};
  for (std::size_t k = 0; k < t.rank(); ++k) {
    legs.push_back(t.legs()[k]);
    dims.push_back(t.dims()[k]);
  }
  legs.push_back("r");
  dims.push_back(1);
  std::vector<Complex> data(t.data().begin(), t.data().end());
  return Tensor(legs, dims, std::move(data), t.scale_exp());
}

}  // namespace

// Boundary contraction ---------------------------------------------------------

BoundaryResult boundary_contract(const TNGraph& tn, const SweepPlan& plan, std::size_t chi,
                                 BoundaryOptions options) {
  std::set<NodeId> seen;
  for (const auto& v : plan.swallow_order) {
    tn.node(v);
    if (!seen.insert(v).second) throw InvalidPlan("node '" + v + "' swallowed twice");
  }
  BoundaryResult result;
  Chain chain;
  std::vector<FrontierLeg> frontier;
  bool started = false;
  bool closed = false;
  Complex closed_value = 1.0;

  for (std::size_t step_index = 0; step_index < plan.swallow_order.size(); ++step_index) {
    const NodeId& v = plan.swallow_order[step_index];
    if (closed) throw InvalidPlan("node '" + v + "' follows a fully contracted network");
    std::string why;
    auto step = plan_swallow(tn, frontier, started, v, &why);
    if (!step) throw InvalidPlan(why + " (step " + std::to_string(step_index) + ")");
    Tensor vt = prefixed(tn.node(v));
    std::vector<LegId> xs;
    for (const auto& l : step->emitted) xs.push_back(internal(l));

    if (!started) {
      started = true;
      if (xs.empty()) {
        closed = true;
        closed_value = vt.data()[0];
        chain.scale += vt.scale_exp();
      } else {
        chain.sites = chain.split(with_boundary_legs(vt), xs, chi);
        chain.center = chain.sites.size() - 1;
      }
      apply_step(tn, frontier, v, *step);
      result.max_frontier = std::max(result.max_frontier, frontier.size());
      continue;
    }

    const std::size_t n = chain.sites.size();
    if (options.canonical_center) {
      if (chain.center < step->begin) chain.move_center(step->begin);
      if (chain.center >= step->end) chain.move_center(step->end - 1);
    }
    Tensor m = chain.merge(step->begin, step->end, n);
    std::vector<LegId> fs, vs;
    for (std::size_t j = 0; j < step->connected.size(); ++j) {
      fs.push_back("f" + std::to_string(j));
      vs.push_back(internal(step->connected[j]));
    }
    m = chain.fold(contract(m, fs, vt, vs));

    std::vector<Tensor> replacement;
    if (xs.empty()) {
      if (step->begin > 0) {
        Tensor& left = chain.sites[step->begin - 1];
        left = chain.fold(contract(left, {"r"}, m.renamed("l", "_a"), {"_a"}));
        chain.center = step->begin - 1;
      } else if (step->end < n) {
        Tensor& right = chain.sites[step->end];
        right = chain.fold(contract(m.renamed("r", "_b"), {"_b"}, right, {"l"}));
        chain.center = step->begin;
      } else {
        closed = true;
        closed_value = m.data()[0];
      }
    } else {
      replacement = chain.split(m.permuted([&] {
        std::vector<LegId> o{"l"};
        o.insert(o.end(), xs.begin(), xs.end());
        o.push_back("r");
        return o;
      }()), xs, chi);
      chain.center = step->begin + replacement.size() - 1;
    }
    chain.sites.erase(chain.sites.begin() + static_cast<long>(step->begin),
                      chain.sites.begin() + static_cast<long>(step->end));
    chain.sites.insert(chain.sites.begin() + static_cast<long>(step->begin), replacement.begin(), replacement.end());
    apply_step(tn, frontier, v, *step);
    result.max_frontier = std::max(result.max_frontier, frontier.size());
  }

  result.truncation_error = std::sqrt(chain.err2);
  if (closed || !started) {
    result.scalar = ScaledScalar::from(started ? closed_value : Complex(1.0), chain.scale);
    return result;
  }

  if (!plan.emit_legs.empty()) {
    std::vector<LegRef> produced;
    for (const auto& f : frontier) produced.push_back(f.inner);
    std::vector<LegRef> rev(produced.rbegin(), produced.rend());
    if (produced == plan.emit_legs) {
      // as produced
    } else if (rev == plan.emit_legs) {
      std::reverse(chain.sites.begin(), chain.sites.end());
      for (auto& s : chain.sites) {
        s = s.renamed(std::map<LegId, LegId>{{"l", "r"}, {"r", "l"}}).permuted({"l", "p", "r"});
      }
      std::reverse(frontier.begin(), frontier.end());
      chain.center = chain.sites.size() - 1 - chain.center;
    } else {
      throw InvalidPlan("final frontier does not match emit_legs");
    }
  }
  result.mps = MPS(std::move(chain.sites), chain.scale);
  result.mps.set_center(chain.center);
  result.legs = std::move(frontier);
  return result;
}

std::vector<PlanIssue> validate_plan(const TNGraph& tn, const SweepPlan& plan, ValidateOptions options) {
  std::vector<PlanIssue> issues;
  std::vector<FrontierLeg> frontier;
  std::set<NodeId> seen;
  bool started = false;
  std::size_t widest = 0;
  for (std::size_t i = 0; i < plan.swallow_order.size(); ++i) {
    const NodeId& v = plan.swallow_order[i];
    if (!tn.has_node(v)) {
      issues.push_back({i, "unknown node '" + v + "'", false});
      return issues;
    }
    if (!seen.insert(v).second) {
      issues.push_back({i, "node '" + v + "' swallowed twice", false});
      return issues;
    }
    std::string why;
    auto step = plan_swallow(tn, frontier, started, v, &why);
    if (!step) {
      issues.push_back({i, why, false});
      return issues;
    }
    started = true;
    apply_step(tn, frontier, v, *step);
    widest = std::max(widest, frontier.size());
  }
  if (!plan.emit_legs.empty() && seen.size() == tn.node_count()) {
    std::vector<LegRef> produced;
    for (const auto& f : frontier) produced.push_back(f.inner);
    std::vector<LegRef> rev(produced.rbegin(), produced.rend());
    if (produced != plan.emit_legs && rev != plan.emit_legs) {
      issues.push_back({plan.swallow_order.size(), "final frontier does not match emit_legs", false});
    }
  }
  std::size_t limit = options.width_warning;
  if (limit == 0) {
    limit = 2 * static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(tn.node_count()))));
  }
  if (widest > limit) {
    issues.push_back({plan.swallow_order.size(),
                      "frontier width " + std::to_string(widest) + " exceeds " + std::to_string(limit), true});
  }
  return issues;
}

SweepPlan greedy_plan(const TNGraph& tn, const std::vector<NodeId>& nodes, const NodeId& start,
                      const std::function<double(const NodeId&)>& priority) {
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> prio(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) prio[i] = priority(nodes[i]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return prio[a] < prio[b]; });

  SweepPlan plan;
  std::vector<FrontierLeg> frontier;
  std::vector<bool> done(nodes.size(), false);
  auto it = std::find(nodes.begin(), nodes.end(), start);
  if (it == nodes.end()) throw InvalidPlan("start node '" + start + "' not in node set");
  std::size_t s = static_cast<std::size_t>(it - nodes.begin());
  auto first = plan_swallow(tn, frontier, false, start, nullptr);
  apply_step(tn, frontier, start, *first);
  done[s] = true;
  plan.swallow_order.push_back(start);

  for (std::size_t count = 1; count < nodes.size(); ++count) {
    bool progressed = false;
    for (std::size_t idx : order) {
      if (done[idx]) continue;
      auto step = plan_swallow(tn, frontier, true, nodes[idx], nullptr);
      if (!step) continue;
      apply_step(tn, frontier, nodes[idx], *step);
      done[idx] = true;
      plan.swallow_order.push_back(nodes[idx]);
      progressed = true;
      break;
    }
    if (!progressed) {
      std::string legs;
      for (const auto& l : frontier) legs += " " + to_string(l.inner) + "->" + (l.outer ? to_string(*l.outer) : "open");
      throw InvalidPlan("no valid continuation after " + std::to_string(count) + " nodes; frontier:" + legs);
    }
  }
  return plan;
}

// Exact contraction ----------------------------------------------------------------

Tensor contract_exact(const TNGraph& tn, const ExactOptions& options) {
  tn.validate();
  std::vector<LegRef> open = tn.open_legs();
  std::size_t open_size = 1;
  for (const auto& r : open) open_size *= tn.node(r.node).dim(r.leg);
  if (open_size > options.open_cap) {
    throw SizeCapExceeded("open legs span " + std::to_string(open_size) + " entries");
  }

  std::vector<Tensor> comps;
  std::vector<std::size_t> comp_of_node(tn.node_count());
  std::vector<bool> alive;
  std::map<LegId, LegId> partner_name;
  for (std::size_t i = 0; i < tn.node_count(); ++i) {
    const NodeId& id = tn.node_ids()[i];
    std::map<LegId, LegId> m;
    for (const auto& l : tn.node(id).legs()) m[l] = exact_leg_name({id, l});
    comps.push_back(tn.node(id).renamed(m));
    comp_of_node[i] = i;
    alive.push_back(true);
  }
  for (const auto& e : tn.edges()) {
    partner_name[exact_leg_name(e.a)] = exact_leg_name(e.b);
    partner_name[exact_leg_name(e.b)] = exact_leg_name(e.a);
  }
  std::map<NodeId, std::size_t> node_index;
  for (std::size_t i = 0; i < tn.node_count(); ++i) node_index[tn.node_ids()[i]] = i;

  auto shared = [&](std::size_t a, std::size_t b, std::vector<LegId>& la, std::vector<LegId>& lb) {
    la.clear();
    lb.clear();
    for (const auto& l : comps[a].legs()) {
      auto it = partner_name.find(l);
      if (it != partner_name.end() && comps[b].has_leg(it->second)) {
        la.push_back(l);
        lb.push_back(it->second);
      }
    }
  };
  auto merge = [&](std::size_t a, std::size_t b) {
    std::vector<LegId> la, lb;
    shared(a, b, la, lb);
    std::size_t inner = 1;
    for (const auto& l : la) inner *= comps[a].dim(l);
    std::size_t out = comps[a].size() / inner * (comps[b].size() / inner);
    if (out > options.intermediate_cap) throw SizeCapExceeded("intermediate of " + std::to_string(out) + " entries");
    comps[a] = contract(comps[a], la, comps[b], lb);
    comps[b] = Tensor();
    alive[b] = false;
    for (auto& c : comp_of_node) {
      if (c == b) c = a;
    }
  };

  if (!options.edge_order.empty()) {
    for (std::size_t ei : options.edge_order) {
      const TNEdge& e = tn.edges().at(ei);
      std::size_t ca = comp_of_node[node_index[e.a.node]];
      std::size_t cb = comp_of_node[node_index[e.b.node]];
      if (ca != cb) merge(std::min(ca, cb), std::max(ca, cb));
    }
  }
  // Greedy: always merge the connected pair with the smallest result.
  while (true) {
    std::size_t best_a = 0, best_b = 0;
    double best = -1.0;
    std::vector<LegId> la, lb;
    for (std::size_t a = 0; a < comps.size(); ++a) {
      if (!alive[a]) continue;
      for (std::size_t b = a + 1; b < comps.size(); ++b) {
        if (!alive[b]) continue;
        shared(a, b, la, lb);
        if (la.empty()) continue;
        double inner = 1.0;
        for (const auto& l : la) inner *= static_cast<double>(comps[a].dim(l));
        double size = static_cast<double>(comps[a].size()) / inner * static_cast<double>(comps[b].size()) / inner;
        if (best < 0.0 || size < best) {
          best = size;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best < 0.0) break;
    merge(best_a, best_b);
  }
  // Disconnected pieces: outer products.
  Tensor result;
  bool have = false;
  for (std::size_t a = 0; a < comps.size(); ++a) {
    if (!alive[a]) continue;
    result = have ? contract(result, {}, comps[a], {}) : comps[a];
    have = true;
  }
  std::vector<LegId> names;
  for (const auto& r : open) names.push_back(exact_leg_name(r));
  return result.permuted(names);
}

// Ring absorption ---------------------------------------------------------------

namespace {

std::optional<std::pair<std::size_t, std::size_t>> ring_run(const RingEnvironment& env, const NodeId& id) {
  const std::size_t n = env.legs.size();
  std::vector<bool> hit(n);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    hit[i] = env.legs[i].node == id;
    count += hit[i];
  }
  if (count == 0) return std::nullopt;
  if (count == n) return std::make_pair(std::size_t{0}, n);
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (hit[i] && !hit[(i + n - 1) % n]) {
      if (start != n) return std::nullopt;
      start = i;
    }
  }
  return std::make_pair(start, count);
}

}  // namespace

bool ring_absorbable(const RingEnvironment& env, const TNGraph& region, const NodeId& id) {
  (void)region;
  return ring_run(env, id).has_value();
}

void absorb_into_ring(RingEnvironment& env, const TNGraph& region, const NodeId& id, std::size_t chi) {
  auto run = ring_run(env, id);
  if (!run) throw InvalidPlan("node '" + id + "' does not touch the ring contiguously");
  const std::size_t n = env.legs.size();
  const auto [start, k] = *run;

  PeriodicMPS rotated = env.ring.rotated(start);
  std::vector<LegRef> legs(env.legs.size());
  for (std::size_t i = 0; i < n; ++i) legs[i] = env.legs[(start + i) % n];

  Chain chain;
  chain.sites = rotated.sites();
  chain.scale = rotated.scale_exp();

  std::vector<LegId> connected;
  for (std::size_t i = 0; i < k; ++i) connected.push_back(legs[i].leg);
  const Tensor& node = region.node(id);
  std::vector<LegId> emitted = emitted_order(node.legs(), connected, true);

  Tensor m = chain.merge(0, k, n);
  std::vector<LegId> fs, vs, xs;
  for (std::size_t j = 0; j < k; ++j) {
    fs.push_back("f" + std::to_string(j));
    vs.push_back(internal(connected[j]));
  }
  for (const auto& l : emitted) xs.push_back(internal(l));
  if (k == n) {
    // The merged ring closes on itself: trace the outer bond pair.
    throw EmptyCore("node '" + id + "' consumes the entire ring");
  }
  m = chain.fold(contract(m, fs, prefixed(node), vs));

  std::vector<Tensor> sites;
  std::vector<LegRef> new_legs;
  if (xs.empty()) {
    chain.sites[k] = chain.fold(contract(m.renamed("r", "_b"), {"_b"}, chain.sites[k], {"l"}));
  } else {
    std::vector<LegId> o{"l"};
    o.insert(o.end(), xs.begin(), xs.end());
    o.push_back("r");
    sites = chain.split(m.permuted(o), xs, chi);
    for (const auto& l : emitted) {
      LegRef r{id, l};
      auto p = region.partner(r);
      new_legs.push_back(p ? *p : r);
    }
  }
  sites.insert(sites.end(), chain.sites.begin() + static_cast<long>(k), chain.sites.end());
  new_legs.insert(new_legs.end(), legs.begin() + static_cast<long>(k), legs.end());
  env.ring = PeriodicMPS(std::move(sites), chain.scale);
  env.legs = std::move(new_legs);
}

}  // namespace kbp
