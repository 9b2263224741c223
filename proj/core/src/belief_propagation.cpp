#include "kbp/belief_propagation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <thread>

#include "kbp/error.hpp"

namespace kbp {

void BPConfig::validate() const {
  if (!(threshold > 0.0)) throw ConfigError("threshold must be positive");
  if (!(damping >= 0.0 && damping <= 1.0)) throw ConfigError("damping must lie in [0, 1]");
  if (chi < 1) throw ConfigError("chi must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (init_bond < 1) throw ConfigError("init_bond must be at least 1");
  if (!(auto_threshold > 0.0)) throw ConfigError("auto_threshold must be positive");
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

// Random X X^dagger flattened ket-major when n is a square, positive entries otherwise.
Tensor random_psd_vector(std::size_t n, std::size_t rank, std::mt19937_64& rng) {
  std::size_t q = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  Tensor v({"m"}, {n});
  if (q * q == n) {
    std::normal_distribution<double> g;
    MatrixC x(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(rank));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = Complex(g(rng), g(rng));
    MatrixC p = x * x.adjoint();
    for (std::size_t k = 0; k < q; ++k)
      for (std::size_t b = 0; b < q; ++b) v.at({k * q + b}) = p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b));
  } else {
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (std::size_t k = 0; k < n; ++k) v.at({k}) = u(rng);
  }
  return v.scaled(1.0 / v.norm());
}

double vector_distance(const Tensor& a, const Tensor& b) {
  Complex c = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) c += std::conj(b.data()[k]) * a.data()[k];
  Complex phase = std::abs(c) > 0.0 ? c / std::abs(c) : Complex(1.0);
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d2 += std::norm(a.data()[k] - phase * b.data()[k]);
  return std::sqrt(d2);
}

// Phase making the operator trace of a (ket, bra) message real and positive.
MPS fix_trace_phase(const MPS& m) {
  Tensor env({"r"}, {1}, {Complex(1.0)});
  for (const Tensor& site : m.sites()) {
    std::size_t P = site.dim("p");
    std::size_t q = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(P))));
    if (q * q != P) return m;
    Tensor id({"p"}, {P});
    for (std::size_t k = 0; k < q; ++k) id.at({k * q + k}) = 1.0;
    Tensor x = contract(site, {"p"}, id, {"p"});
    env = contract(env, {"r"}, x, {"l"});
  }
  Complex tr = env.data()[0];
  if (std::abs(tr) == 0.0) return m;
  return m.scaled(std::conj(tr) / std::abs(tr));
}

struct Endpoints {
  LegRef from;
  LegRef to;
};

Endpoints endpoints(const TNGraph& tn, const DirectedEdge& d) {
  const TNEdge& e = tn.edges()[d.edge];
  return d.forward ? Endpoints{e.a, e.b} : Endpoints{e.b, e.a};
}

}  // namespace

BPResult bp_run(const TNGraph& tn, const BPConfig& cfg) {
  cfg.validate();
  tn.validate();
  if (!tn.open_legs().empty()) throw InvalidPlan("belief propagation needs a closed network");
  const auto& edges = tn.edges();
  std::map<LegRef, DirectedEdge> incoming;  // target leg -> message arriving there
  std::vector<DirectedEdge> order;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].a.node == edges[e].b.node) throw InvalidPlan("self-loop on node '" + edges[e].a.node + "'");
    for (bool fwd : {true, false}) {
      DirectedEdge d{e, fwd};
      order.push_back(d);
      incoming[endpoints(tn, d).to] = d;
    }
  }

  BPResult res;
  std::mt19937_64 rng(cfg.seed);
  for (const auto& d : order) {
    const LegRef& from = endpoints(tn, d).from;
    res.messages[d] = random_psd_vector(tn.node(from.node).dim(from.leg), cfg.init_bond, rng);
  }
  if (order.empty()) {
    res.converged = true;
    return res;
  }

  auto update = [&](const std::map<DirectedEdge, Tensor>& src, const DirectedEdge& d) {
    const LegRef& from = endpoints(tn, d).from;
    Tensor t = tn.node(from.node);
    for (const auto& leg : tn.node(from.node).legs()) {
      if (leg == from.leg) continue;
      t = contract(t, {leg}, src.at(incoming.at({from.node, leg})), {"m"});
    }
    t = t.renamed(from.leg, "m");
    t.set_scale_exp(0);
    double n = t.norm();
    if (n == 0.0) throw DecompositionFailure("message on edge " + to_string(from) + " vanished");
    return t.scaled(1.0 / n);
  };

  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    double worst = 0.0;
    std::size_t moved = 0;
    auto note = [&](double dist) {
      worst = std::max(worst, dist);
      moved += dist > cfg.threshold;
    };
    if (cfg.schedule == Schedule::Synchronous) {
      std::map<DirectedEdge, Tensor> next;
      for (const auto& d : order) next[d] = update(res.messages, d);
      for (const auto& d : order) note(vector_distance(next[d], res.messages[d]));
      res.messages = std::move(next);
    } else {
      for (const auto& d : order) {
        Tensor m = update(res.messages, d);
        note(vector_distance(m, res.messages[d]));
        res.messages[d] = std::move(m);
      }
    }
    res.iterations = it;
    res.history.push_back(worst);
    res.unsettled.push_back(moved);
    if (worst <= cfg.threshold) {
      res.converged = true;
      break;
    }
  }
  return res;
}

Tensor bp_environment(const TNGraph& tn, const BPResult& result, const NodeId& node) {
  std::map<LegRef, DirectedEdge> incoming;
  for (const auto& [d, m] : result.messages) incoming[endpoints(tn, d).to] = d;
  Tensor env = Tensor::scalar(1.0);
  for (const auto& leg : tn.node(node).legs()) {
    auto it = incoming.find({node, leg});
    if (it == incoming.end()) throw UnknownLeg("no message arrives at " + node + ":" + leg);
    env = contract(env, {}, result.messages.at(it->second).renamed("m", leg), {});
  }
  env.set_scale_exp(0);
  return env.scaled(1.0 / env.norm());
}

// ---------------------------------------------------------------------------------------------

std::vector<MPS> init_messages(const Block& block, std::size_t init_bond, std::mt19937_64& rng) {
  std::vector<MPS> out;
  for (const auto& f : block.faces) {
    std::vector<Tensor> sites;
    for (std::size_t e : f.edges) {
      const OuterEdge& oe = block.outer[e];
      std::size_t D = block.site_tensor(oe.site).dim(oe.name);
      Tensor v = random_psd_vector(D * D, init_bond, rng);
      sites.push_back(Tensor({"l", "p", "r"}, {1, D * D, 1}, std::vector<Complex>(v.data().begin(), v.data().end())));
    }
    out.push_back(fix_trace_phase(normalized(MPS(std::move(sites)))));
  }
  return out;
}

std::vector<MPS> init_messages(const Block& block, const BPConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return init_messages(block, cfg.init_bond, rng);
}

OutgoingMessage outgoing_message(const Block& block, const std::vector<MPS>& messages, std::size_t face,
                                 std::size_t chi) {
  if (!block.plans) throw InvalidPlan("block has no sweep plans");
  std::vector<MPS> in = messages;
  in.at(face) = MPS();
  BlockNetwork net = block_network(block, in);
  BoundaryResult r = boundary_contract(net.tn, block.plans->outgoing.at(face), chi);
  std::vector<std::size_t> ranks = face_partner_ranks(block, face);
  const std::size_t n = ranks.size();
  bool same = true, flipped = true;
  for (std::size_t k = 0; k < n; ++k) {
    same = same && ranks[k] == k;
    flipped = flipped && ranks[k] == n - 1 - k;
  }
  MPS m = r.mps;
  if (!same) {
    if (!flipped) throw InvalidGeometry("face " + block.faces[face].name + " does not map monotonically onto its opposite");
    m = m.reversed();
  }
  return {fix_trace_phase(normalized(m)), r.truncation_error};
}

BlockBPResult blockbp_run(const Block& block, const BPConfig& cfg, std::optional<std::vector<MPS>> initial) {
  cfg.validate();
  if (!block.plans) throw InvalidPlan("block has no sweep plans");
  auto tiling = check_tiling(block);
  if (!tiling.empty()) throw InvalidGeometry("block does not tile: " + tiling.front());
  const std::size_t nf = block.faces.size();

  BlockBPResult res;
  res.messages = initial ? std::move(*initial) : init_messages(block, cfg);
  if (res.messages.size() != nf) throw ShapeMismatch("one initial message per face required");

  bool herm = cfg.hermitize == HermitizePolicy::Every;
  double last = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    // Once switched on, hermitization stays on.
    if (cfg.hermitize == HermitizePolicy::Auto) herm = herm || last < cfg.auto_threshold;
    const std::vector<MPS> old = res.messages;
    std::vector<FaceUpdate> ups(nf);

    auto job = [&](std::size_t f, const std::vector<MPS>& src) {
      auto t0 = std::chrono::steady_clock::now();
      const std::size_t target = block.faces[f].opposite;
      OutgoingMessage out = outgoing_message(block, src, f, cfg.chi);
      MPS m = std::move(out.message);
      if (herm) m = fix_trace_phase(normalized(hermitize(m)));
      const MPS& prev = old[target];
      if (cfg.damping < 1.0) {
        m = fix_trace_phase(normalized(compress(add(m, prev, cfg.damping, 1.0 - cfg.damping), cfg.chi).mps));
      }
      FaceUpdate u;
      u.iteration = it;
      u.face = target;
      u.face_name = block.faces[target].name;
      u.distance = distance(m, prev);
      u.truncation_error = out.truncation_error;
      u.wall_ms = elapsed_ms(t0);
      return std::make_pair(std::move(m), u);
    };

    if (cfg.schedule == Schedule::Sequential) {
      for (std::size_t f = 0; f < nf; ++f) {
        auto [m, u] = job(f, res.messages);
        res.messages[u.face] = std::move(m);
        ups[f] = u;
      }
    } else {
      std::vector<MPS> next(nf);
      std::atomic<std::size_t> cursor{0};
      auto worker = [&]() {
        for (std::size_t f = cursor++; f < nf; f = cursor++) {
          auto [m, u] = job(f, old);
          next[u.face] = std::move(m);
          ups[f] = u;
        }
      };
      const std::size_t nw = std::min(cfg.workers, nf);
      if (nw <= 1) {
        worker();
      } else {
        std::vector<std::future<void>> pool;
        for (std::size_t w = 0; w < nw; ++w) pool.push_back(std::async(std::launch::async, worker));
        for (auto& p : pool) p.get();
      }
      res.messages = std::move(next);
    }

    last = 0.0;
    for (const auto& u : ups) last = std::max(last, u.distance);
    res.log.insert(res.log.end(), ups.begin(), ups.end());
    res.iterations = it;
    res.final_distance = last;
    res.hermitized = herm;
    if (last <= cfg.threshold) {
      res.converged = true;
      break;
    }
  }
  return res;
}

std::vector<MPS> rotate_messages(const Block& block, const std::vector<MPS>& messages, int steps) {
  if (block.shape != BlockShape::Hexagon) throw UnsupportedShape("message rotation needs a hexagonal block");
  const std::size_t nf = block.faces.size();
  if (messages.size() != nf) throw ShapeMismatch("one message per face required");
  std::vector<MPS> out(nf);
  const std::size_t shift = static_cast<std::size_t>(((2 * steps) % 6 + 6) % 6);
  for (std::size_t f = 0; f < nf; ++f) out[(f + shift) % nf] = messages[f];
  return out;
}

void write_convergence_csv(std::ostream& out, const BlockBPResult& result, bool with_timing) {
  out << "iteration,face,distance,wall_ms\n";
  char buf[64];
  for (const auto& u : result.log) {
    std::snprintf(buf, sizeof buf, "%.12e", u.distance);
    out << u.iteration << ',' << u.face_name << ',' << buf << ',';
    if (with_timing) {
      std::snprintf(buf, sizeof buf, "%.3f", u.wall_ms);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace kbp
