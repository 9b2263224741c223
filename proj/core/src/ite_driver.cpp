#include "kbp/ite_driver.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json_tensor.hpp"
#include "kbp/error.hpp"
#include "kbp/observables.hpp"

namespace kbp {

std::uint64_t derive_seed(std::uint64_t master, std::string_view component) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : component) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double Measurement::energy_mean() const {
  if (energies.empty()) return 0.0;
  double s = 0.0;
  for (double e : energies) s += e;
  return s / static_cast<double>(energies.size());
}

double energy_per_site(const IteSystem& system, const Measurement& m) {
  double s = 0.0;
  for (double e : m.energies) s += e;
  return s / system.sites_per_cell();
}

namespace {

MatrixC swap_sites(const MatrixC& h, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  MatrixC out(h.rows(), h.cols());
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index e = 0; e < n; ++e) out(b * n + a, e * n + c) = h(a * n + b, c * n + e);
  return out;
}

std::string engine_text(const std::mt19937_64& rng) {
  std::ostringstream s;
  s << rng;
  return s.str();
}

void engine_from(std::mt19937_64& rng, const std::map<std::string, std::string>& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw FormatError("checkpoint has no random state '" + key + "'");
  std::istringstream s(it->second);
  s >> rng;
  if (!s) throw FormatError("unreadable random state '" + key + "'");
}

// Fills energies, negativities and the single-site magnetization of every listed edge.
void record_edge(Measurement& m, const EdgeTN& e, const BondTerm& term, bool swapped) {
  DensityMatrix rho = rdm_two_site(e);
  BondTerm t = term;
  if (swapped) t.h = swap_sites(term.h, term.d);
  m.energies.push_back(bond_energy(rho, t));
  m.negativities.push_back(negativity(rho));
  for (std::size_t k : {0u, 1u}) {
    auto s = magnetization(partial_trace(rho, k));
    for (int a = 0; a < 3; ++a) m.magnetization[a] += s[a];
  }
}

void finish_magnetization(Measurement& m) {
  const double n = 2.0 * static_cast<double>(m.energies.size());
  for (auto& x : m.magnetization) x /= n;
}

Tensor to_lattice_order(const Tensor& t, const Lattice& lat, int role) {
  std::vector<LegId> order{"p"};
  for (const auto& l : lat.legs(role)) order.push_back(l.name);
  return t.permuted(order);
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// SingleBondSystem

SingleBondSystem::SingleBondSystem(BondTerm term, std::size_t D, std::uint64_t seed)
    : term_(std::move(term)), noise_rng_(derive_seed(seed, "noise")) {
  check_term(term_);
  if (term_.edge.empty()) term_.edge = "bond";
  std::mt19937_64 rng(derive_seed(seed, "tensors"));
  for (auto& k : kets_) {
    k = Tensor::random({"p", "b"}, {term_.d, D}, rng);
    k = k.scaled(1.0 / k.max_abs());
  }
}

std::vector<TermGroup> SingleBondSystem::groups() const { return {{SupportedTerm{term_, {"0", "1"}}}}; }

EdgeTN SingleBondSystem::edge() const { return identity_edge(kets_[0], kets_[1], "b", "b"); }

StepReport SingleBondSystem::apply(const std::string& edge_name, double dt, const ALSConfig& als) {
  if (edge_name != term_.edge) throw UnknownEdge("'" + edge_name + "' is not the bond of this system");
  StepReport rep;
  EdgeTN e = edge();
  record_edge(rep.measured, e, term_, false);
  finish_magnetization(rep.measured);
  rep.als = als_update(e, build_gate(term_, dt), als);
  kets_[0] = rep.als.ket_i;
  kets_[1] = rep.als.ket_j;
  return rep;
}

Measurement SingleBondSystem::measure() {
  Measurement m;
  record_edge(m, edge(), term_, false);
  finish_magnetization(m);
  return m;
}

void SingleBondSystem::perturb(double sigma) {
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
  if (sigma == 0.0) return;
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  for (auto& k : kets_) {
    const double scale = sigma * k.norm() / std::sqrt(static_cast<double>(k.size()));
    for (auto& x : k.data()) x += scale * Complex(g(noise_rng_), g(noise_rng_));
  }
}

SystemState SingleBondSystem::state() const {
  SystemState s;
  s.tensors = {kets_[0], kets_[1]};
  s.rng["noise"] = engine_text(noise_rng_);
  return s;
}

void SingleBondSystem::restore(const SystemState& s) {
  if (s.tensors.size() != 2) throw FormatError("single bond state needs two tensors");
  kets_[0] = s.tensors[0];
  kets_[1] = s.tensors[1];
  engine_from(noise_rng_, s.rng, "noise");
}

// ---------------------------------------------------------------------------------------------
// KagomeSystem

KagomeSystem::KagomeSystem(BondTerm prototype, KagomeOptions options, std::optional<UnitCell> initial)
    : prototype_(std::move(prototype)),
      opt_(std::move(options)),
      mode_rng_(derive_seed(opt_.seed, "mode")),
      rotation_rng_(derive_seed(opt_.seed, "rotation")),
      noise_rng_(derive_seed(opt_.seed, "noise")) {
  check_term(prototype_);
  opt_.bp.validate();
  if (prototype_.d != opt_.d) throw ConfigError("d does not match the Hamiltonian term");
  const Lattice lat = kagome_lattice();
  UnitCell uc;
  if (initial) {
    uc = *initial;
  } else {
    std::mt19937_64 rng(derive_seed(opt_.seed, "tensors"));
    uc = UnitCell::random(lat, opt_.d, opt_.D, rng);
  }
  block_ = build_block(uc, opt_.N);
  BPConfig init = opt_.bp;
  init.seed = derive_seed(opt_.seed, "messages");
  messages_ = init_messages(block_, init);
}

std::vector<TermGroup> KagomeSystem::groups() const { return kagome_groups(prototype_); }

BlockBPResult KagomeSystem::converge(const Block& b, const std::vector<MPS>& msgs) {
  // Warm starts stay on the hermitized branch once a run has switched to it.
  BPConfig cfg = opt_.bp;
  if (hermitized_ && cfg.hermitize == HermitizePolicy::Auto) cfg.hermitize = HermitizePolicy::Every;
  BlockBPResult r = blockbp_run(b, cfg, msgs);
  hermitized_ = hermitized_ || r.hermitized;
  return r;
}

Measurement KagomeSystem::measure_mode(const ModeTN& mode, int steps) const {
  const Lattice& lat = block_.lattice;
  auto legs = rotation_leg_map(lat, steps);
  Measurement m;
  for (const auto& bond : kagome_bonds()) {
    EdgeTN e = mode_to_edge(mode, legs.at(bond));
    const int role_a = rotate_role(lat.bonds[lat.bond_index(bond)].role_a, steps);
    record_edge(m, e, prototype_, e.role_i != role_a);
  }
  finish_magnetization(m);
  return m;
}

StepReport KagomeSystem::apply(const std::string& edge, double dt, const ALSConfig& als) {
  if (als.D != opt_.D) throw ConfigError("ALS bond dimension differs from the unit cell's");
  const Lattice& lat = block_.lattice;
  const LatticeBond& bond = lat.bonds[lat.bond_index(edge)];
  const int steps = opt_.rotate ? std::uniform_int_distribution<int>(0, 2)(rotation_rng_) : 0;
  const Mode mode = opt_.shuffle_modes ? static_cast<Mode>(std::uniform_int_distribution<int>(0, 2)(mode_rng_)) : Mode::A;

  const Block rb = steps ? rotate_block(block_, 120 * steps) : block_;
  const std::vector<MPS> rm = steps ? rotate_messages(block_, messages_, steps) : messages_;
  BlockBPResult bp = converge(rb, rm);
  CoreTN core = block_to_core(rb, bp.messages, opt_.bp.chi, 0);
  ModeTN m = core_to_mode(core, mode);

  StepReport rep;
  rep.bp_iterations = bp.iterations;
  rep.bp_converged = bp.converged;
  rep.measured = measure_mode(m, steps);

  EdgeTN e = mode_to_edge(m, rotation_leg_map(lat, steps).at(edge));
  Tensor gate = build_gate(prototype_, dt);
  if (e.role_i != rotate_role(bond.role_a, steps)) gate = swap_gate_sites(gate);
  rep.als = als_update(e, gate, als);

  UnitCell uc = rb.unit_cell;
  uc.tensors[static_cast<std::size_t>(e.role_i)] = to_lattice_order(rep.als.ket_i, lat, e.role_i);
  uc.tensors[static_cast<std::size_t>(e.role_j)] = to_lattice_order(rep.als.ket_j, lat, e.role_j);
  const int back = (3 - steps) % 3;
  block_ = with_unit_cell(block_, back ? rotate_unit_cell(lat, uc, back) : uc);
  messages_ = back ? rotate_messages(rb, bp.messages, back) : bp.messages;
  return rep;
}

Measurement KagomeSystem::measure() {
  BlockBPResult bp = converge(block_, messages_);
  messages_ = bp.messages;
  CoreTN core = block_to_core(block_, messages_, opt_.bp.chi, 0);
  return measure_mode(core_to_mode(core, Mode::A), 0);
}

void KagomeSystem::perturb(double sigma) {
  if (sigma == 0.0) return;
  block_ = gaussian_perturb(block_, sigma, noise_rng_());
}

SystemState KagomeSystem::state() const {
  SystemState s;
  s.tensors = block_.unit_cell.tensors;
  s.messages = messages_;
  s.messages_hermitized = hermitized_;
  s.rng["mode"] = engine_text(mode_rng_);
  s.rng["rotation"] = engine_text(rotation_rng_);
  s.rng["noise"] = engine_text(noise_rng_);
  return s;
}

void KagomeSystem::restore(const SystemState& s) {
  UnitCell uc;
  uc.tensors = s.tensors;
  block_ = with_unit_cell(block_, uc);
  if (s.messages.size() != block_.faces.size()) throw FormatError("checkpoint message count does not match the block");
  messages_ = s.messages;
  hermitized_ = s.messages_hermitized;
  engine_from(mode_rng_, s.rng, "mode");
  engine_from(rotation_rng_, s.rng, "rotation");
  engine_from(noise_rng_, s.rng, "noise");
}

// ---------------------------------------------------------------------------------------------
// RunLog

std::string RunLog::header(bool with_timing) const {
  std::string h = "step,dt,edge,energy_mean";
  for (const auto& b : bonds_) h += ",e_" + b;
  h += ",sx,sy,sz";
  for (const auto& b : bonds_) h += ",neg_" + b;
  h += ",bp_iterations";
  if (with_timing) h += ",wall_ms";
  return h;
}

std::string RunLog::format(const RunLogRow& row, bool with_timing) const {
  std::ostringstream s;
  s << std::setprecision(12);
  s << row.step << ',' << row.dt << ',' << row.edge << ',' << row.measured.energy_mean();
  for (double e : row.measured.energies) s << ',' << e;
  for (double x : row.measured.magnetization) s << ',' << x;
  for (double n : row.measured.negativities) s << ',' << n;
  s << ',' << row.bp_iterations;
  if (with_timing) s << ',' << std::setprecision(6) << row.wall_ms;
  return s.str();
}

void RunLog::write_csv(std::ostream& out, bool with_timing) const {
  out << header(with_timing) << '\n';
  for (const auto& r : rows_) out << format(r, with_timing) << '\n';
}

// ---------------------------------------------------------------------------------------------
// Driver

IteResult full_ite(IteSystem& system, const std::vector<double>& dt_list, const IteConfig& cfg, RunLog& log,
                   const RowCallback& on_row, std::optional<IteProgress> resume) {
  cfg.als.validate();
  if (!(cfg.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
  if (cfg.checkpoint_every > 0 && cfg.checkpoint_path.empty()) throw ConfigError("checkpoint_path is empty");
  const auto t_start = std::chrono::steady_clock::now();
  TrotterSchedule sched = trotter_schedule(system.groups(), dt_list);
  const auto& apps = sched.applications;

  IteProgress prog;
  prog.best_energy = std::numeric_limits<double>::infinity();
  if (resume) prog = *resume;

  IteResult res;
  for (std::size_t di = prog.dt_index; di < dt_list.size(); ++di) {
    const double dt = dt_list[di];
    if (prog.application == 0 && cfg.noise_sigma > 0.0) system.perturb(cfg.noise_sigma);
    for (std::size_t a = prog.application; a < apps.size(); ++a) {
      const auto t0 = std::chrono::steady_clock::now();
      StepReport rep = system.apply(apps[a].edge, dt * apps[a].dt_fraction, cfg.als);
      RunLogRow row;
      row.step = prog.step;
      row.dt = dt;
      row.edge = apps[a].edge;
      row.measured = std::move(rep.measured);
      row.bp_iterations = rep.bp_iterations;
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      prog.best_energy = std::min(prog.best_energy, energy_per_site(system, row.measured));
      prog.bp_failures += rep.bp_converged ? 0 : 1;
      log.append(row);
      if (on_row) on_row(log, log.rows().back());

      ++prog.step;
      prog.application = a + 1;
      prog.dt_index = di;
      if (cfg.checkpoint_every > 0 && prog.step % cfg.checkpoint_every == 0) {
        IteProgress cp = prog;
        if (cp.application == apps.size()) {
          cp.application = 0;
          ++cp.dt_index;
        }
        write_checkpoint(cfg.checkpoint_path, system, cp);
      }
    }
    prog.application = 0;
    prog.dt_index = di + 1;
  }
  res.final = system.measure();
  res.best_energy = std::min(prog.best_energy, energy_per_site(system, res.final));
  res.applications = prog.step;
  res.bp_failures = prog.bp_failures;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

// ---------------------------------------------------------------------------------------------
// Checkpoints

void write_checkpoint(const std::filesystem::path& path, const IteSystem& system, const IteProgress& p) {
  using nlohmann::json;
  SystemState s = system.state();
  json j;
  j["format"] = "kbp-checkpoint";
  j["version"] = 1;
  j["kind"] = system.kind();
  j["progress"] = {{"dt_index", p.dt_index},
                   {"application", p.application},
                   {"step", p.step},
                   {"bp_failures", p.bp_failures}};
  j["progress"]["best_energy"] = std::isfinite(p.best_energy) ? json(p.best_energy) : json(nullptr);
  j["tensors"] = json::array();
  for (const auto& t : s.tensors) j["tensors"].push_back(detail::tensor_to_json(t));
  j["messages"] = json::array();
  for (const auto& m : s.messages) {
    json mj;
    mj["scale_exp"] = m.scale_exp();
    mj["center"] = m.center() ? json(*m.center()) : json(nullptr);
    mj["sites"] = json::array();
    for (const auto& t : m.sites()) mj["sites"].push_back(detail::tensor_to_json(t));
    j["messages"].push_back(mj);
  }
  j["messages_hermitized"] = s.messages_hermitized;
  j["rng"] = s.rng;
  // Write then rename so a crash never leaves a truncated checkpoint.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, j.dump());
  std::filesystem::rename(tmp, path);
}

namespace {

nlohmann::json parse_checkpoint(const std::filesystem::path& path) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "kbp-checkpoint") throw FormatError("not a checkpoint file");
    if (j.at("version").get<int>() != 1) throw FormatError("unsupported checkpoint version");
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  return j;
}

}  // namespace

std::vector<Tensor> read_checkpoint_tensors(const std::filesystem::path& path) {
  const nlohmann::json j = parse_checkpoint(path);
  try {
    std::vector<Tensor> out;
    for (const auto& t : j.at("tensors")) out.push_back(detail::tensor_from_json(t));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint record: ") + e.what());
  }
}

IteProgress read_checkpoint(const std::filesystem::path& path, IteSystem& system) {
  using nlohmann::json;
  const json j = parse_checkpoint(path);
  try {
    if (j.at("kind").get<std::string>() != system.kind()) {
      throw FormatError("checkpoint holds a '" + j.at("kind").get<std::string>() + "' system");
    }
    SystemState s;
    for (const auto& t : j.at("tensors")) s.tensors.push_back(detail::tensor_from_json(t));
    for (const auto& mj : j.at("messages")) {
      std::vector<Tensor> sites;
      for (const auto& t : mj.at("sites")) sites.push_back(detail::tensor_from_json(t));
      MPS m(std::move(sites), mj.at("scale_exp").get<long>());
      if (!mj.at("center").is_null()) m.set_center(mj.at("center").get<std::size_t>());
      s.messages.push_back(std::move(m));
    }
    s.messages_hermitized = j.value("messages_hermitized", false);
    s.rng = j.at("rng").get<std::map<std::string, std::string>>();
    system.restore(s);
    const json& pj = j.at("progress");
    IteProgress p;
    p.dt_index = pj.at("dt_index").get<std::size_t>();
    p.application = pj.at("application").get<std::size_t>();
    p.step = pj.at("step").get<std::size_t>();
    p.bp_failures = pj.at("bp_failures").get<std::size_t>();
    p.best_energy = pj.at("best_energy").is_null() ? std::numeric_limits<double>::infinity()
                                                   : pj.at("best_energy").get<double>();
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint record: ") + e.what());
  }
}

}  // namespace kbp
