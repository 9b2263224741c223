#include "commands.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "kbp/error.hpp"
#include "kbp/observables.hpp"
#include "kbp/operators.hpp"
#include "kbp/reductions.hpp"
#include "kbp/tn_io.hpp"

namespace kbp::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

std::ofstream open_output(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream f(path, mode);
  if (!f) throw FormatError("cannot write '" + path.string() + "'");
  f << std::setprecision(12);
  return f;
}

void write_json(const std::filesystem::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json measurement_json(const Measurement& m, const std::vector<std::string>& bonds) {
  json j;
  j["energy_mean"] = m.energy_mean();
  json e = json::object();
  json n = json::object();
  for (std::size_t k = 0; k < bonds.size() && k < m.energies.size(); ++k) {
    e[bonds[k]] = m.energies[k];
    n[bonds[k]] = m.negativities[k];
  }
  j["energies"] = e;
  j["negativities"] = n;
  j["magnetization"] = m.magnetization;
  return j;
}

BondTerm hamiltonian(const RunConfig&, const std::string& edge = "") { return heisenberg_term(edge); }

// Bond energies, negativities and magnetization at the central core, mode A.
Measurement measure_block(const Block& b, const std::vector<MPS>& messages, std::size_t chi, const BondTerm& h) {
  ModeTN mode = core_to_mode(block_to_core(b, messages, chi, 0), Mode::A);
  Measurement m;
  for (const auto& bond : kagome_bonds()) {
    DensityMatrix rho = rdm_two_site(mode_to_edge(mode, bond));
    m.energies.push_back(bond_energy(rho, h));
    m.negativities.push_back(negativity(rho));
    for (std::size_t k : {0u, 1u}) {
      auto s = magnetization(partial_trace(rho, k));
      for (int a = 0; a < 3; ++a) m.magnetization[a] += s[a] / (2.0 * kagome_bonds().size());
    }
  }
  return m;
}

}  // namespace

std::filesystem::path output_file(const RunConfig& cfg, const std::string& suffix) {
  const std::filesystem::path dir = cfg.get("output.dir");
  std::filesystem::create_directories(dir);
  return dir / (cfg.get("output.prefix") + "_" + suffix);
}

UnitCell initial_unit_cell(const RunConfig& cfg) {
  const Lattice lat = kagome_lattice();
  UnitCell uc;
  if (!cfg.get("state").empty()) {
    uc.tensors = read_checkpoint_tensors(cfg.get("state"));
    uc.validate(lat);
    if (uc.bond_dim() != cfg.get_size("D") || uc.phys_dim() != cfg.get_size("d")) {
      throw ConfigError("key 'state': checkpoint dimensions differ from d and D");
    }
    return uc;
  }
  std::mt19937_64 rng(derive_seed(cfg.get_size("seed"), "tensors"));
  return UnitCell::random(lat, cfg.get_size("d"), cfg.get_size("D"), rng);
}

// ---------------------------------------------------------------------------------------------
// ite

int cmd_ite(const RunConfig& cfg, std::ostream& log) {
  const std::vector<double> dts = parse_dt_schedule(cfg.get("dt_schedule"));
  std::unique_ptr<IteSystem> system;
  if (cfg.get("system") == "single_bond") {
    system = std::make_unique<SingleBondSystem>(hamiltonian(cfg, "bond"), cfg.get_size("D"), cfg.get_size("seed"));
  } else {
    std::optional<UnitCell> initial;
    if (!cfg.get("state").empty()) initial = initial_unit_cell(cfg);
    system = std::make_unique<KagomeSystem>(hamiltonian(cfg), kagome_options(cfg), initial);
  }
  IteConfig ic = ite_config(cfg);
  ic.checkpoint_path = output_file(cfg, "checkpoint.json");

  std::optional<IteProgress> resume;
  if (!cfg.get("resume").empty()) {
    resume = read_checkpoint(cfg.get("resume"), *system);
    log << "[kbp] resuming at step " << resume->step << " (dt index " << resume->dt_index << ")\n";
  }

  const auto csv_path = output_file(cfg, "log.csv");
  const bool append = resume && std::filesystem::exists(csv_path);
  std::ofstream csv = open_output(csv_path, append ? std::ios::app : std::ios::out);
  RunLog runlog(system->bonds());
  if (!append) csv << runlog.header() << '\n';

  const std::size_t per_sweep = trotter_schedule(system->groups(), 1.0).applications.size();
  const double sites = system->sites_per_cell();
  auto last_print = Clock::now();
  auto on_row = [&](const RunLog& l, const RunLogRow& row) {
    csv << l.format(row) << '\n';
    csv.flush();
    if ((row.step + 1) % per_sweep == 0 && ms_since(last_print) > 2000.0) {
      last_print = Clock::now();
      double e = 0.0;
      for (double x : row.measured.energies) e += x;
      log << "[kbp] step " << row.step + 1 << " dt " << row.dt << " energy/site " << std::setprecision(8) << e / sites
          << " bp_iterations " << row.bp_iterations << '\n';
      log.flush();
    }
  };
  IteResult res = full_ite(*system, dts, ic, runlog, on_row, resume);

  IteProgress done;
  done.dt_index = dts.size();
  done.step = res.applications;
  done.best_energy = res.best_energy;
  done.bp_failures = res.bp_failures;
  write_checkpoint(ic.checkpoint_path, *system, done);

  json s = measurement_json(res.final, system->bonds());
  s["system"] = system->kind();
  s["seed"] = cfg.get_size("seed");
  s["D"] = cfg.get_size("D");
  s["chi"] = cfg.get("chi");
  s["energy_per_site"] = energy_per_site(*system, res.final);
  s["best_energy"] = res.best_energy;
  s["applications"] = res.applications;
  s["bp_failures"] = res.bp_failures;
  s["wall_seconds"] = res.wall_seconds;
  s["log"] = csv_path.filename().string();
  s["checkpoint"] = ic.checkpoint_path.filename().string();
  write_json(output_file(cfg, "summary.json"), s);
  log << "[kbp] final energy/site " << std::setprecision(10) << energy_per_site(*system, res.final) << " best "
      << res.best_energy << " after " << res.applications << " gates in " << res.wall_seconds << " s\n";
  return 0;
}

// ---------------------------------------------------------------------------------------------
// bp

int cmd_bp(const RunConfig& cfg, std::ostream& log) {
  BPConfig bp = bp_config(cfg);
  const auto csv_path = output_file(cfg, "bp.csv");
  std::ofstream csv = open_output(csv_path);
  json s;
  if (!cfg.get("tn_file").empty()) {
    TNGraph tn = tn_from_json(read_text_file(cfg.get("tn_file")));
    BPResult r = bp_run(tn, bp);
    csv << "iteration,distance,unsettled\n";
    for (std::size_t k = 0; k < r.history.size(); ++k) csv << k + 1 << ',' << r.history[k] << ',' << r.unsettled[k] << '\n';
    s["network"] = cfg.get("tn_file");
    s["iterations"] = r.iterations;
    s["converged"] = r.converged;
    s["final_distance"] = r.history.empty() ? 0.0 : r.history.back();
    log << "[kbp] bp " << (r.converged ? "converged" : "stopped") << " after " << r.iterations << " iterations\n";
  } else {
    const Block b = build_block(initial_unit_cell(cfg), static_cast<int>(cfg.get_int("N")));
    BlockBPResult r = blockbp_run(b, bp);
    write_convergence_csv(csv, r);
    const Measurement m = measure_block(b, r.messages, bp.chi, hamiltonian(cfg));
    s = measurement_json(m, kagome_bonds());
    s["energy_per_site"] = m.energy_mean() * 2.0;
    s["sites"] = b.site_count();
    s["iterations"] = r.iterations;
    s["converged"] = r.converged;
    s["final_distance"] = r.final_distance;
    log << "[kbp] blockbp " << (r.converged ? "converged" : "stopped") << " after " << r.iterations
        << " iterations, distance " << r.final_distance << '\n';
  }
  write_json(output_file(cfg, "bp_summary.json"), s);
  return 0;
}

// ---------------------------------------------------------------------------------------------
// contract

int cmd_contract(const RunConfig& cfg, std::ostream& log) {
  if (cfg.get("tn_file").empty()) throw ConfigError("key 'tn_file': contract needs a tensor network file");
  TNGraph tn = tn_from_json(read_text_file(cfg.get("tn_file")));
  tn.validate();
  if (tn.node_count() == 0) throw ConfigError("key 'tn_file': the network has no nodes");
  SweepPlan plan;
  if (!cfg.get("plan_file").empty()) {
    plan = plan_from_json(read_text_file(cfg.get("plan_file")));
  } else {
    std::map<NodeId, double> rank;
    for (std::size_t k = 0; k < tn.node_count(); ++k) rank[tn.node_ids()[k]] = static_cast<double>(k);
    plan = greedy_plan(tn, tn.node_ids(), tn.node_ids().front(), [&](const NodeId& id) { return rank.at(id); });
  }
  const std::size_t chi = cfg.get_chi("contract.chi");
  const auto t0 = Clock::now();
  BoundaryResult r = boundary_contract(tn, plan, chi);
  if (!r.legs.empty()) throw InvalidPlan("contract needs a closed network; " + std::to_string(r.legs.size()) + " legs remain");
  json s;
  s["mantissa"] = {r.scalar.mantissa.real(), r.scalar.mantissa.imag()};
  s["exponent"] = r.scalar.exponent;
  s["log10_abs"] = r.scalar.is_zero() ? json(nullptr) : json(r.scalar.log10_abs());
  s["chi"] = chi == kUnlimited ? json("unlimited") : json(chi);
  s["truncation_error"] = r.truncation_error;
  s["max_frontier"] = r.max_frontier;
  s["wall_ms"] = ms_since(t0);
  write_json(output_file(cfg, "contract.json"), s);
  log << "[kbp] contract = (" << std::setprecision(15) << r.scalar.mantissa.real() << ", " << r.scalar.mantissa.imag()
      << ") x 10^" << r.scalar.exponent << '\n';
  return 0;
}

// ---------------------------------------------------------------------------------------------
// represent

std::vector<RepresentRow> represent_rows(const RunConfig& cfg, const UnitCell& uc, std::ostream& log) {
  const std::string bond = cfg.get("represent.bond");
  const std::size_t chi = cfg.get_chi("represent.chi");
  const std::uint64_t seed = cfg.get_size("seed");
  auto rdm = [&](const Block& b, const std::vector<MPS>& msgs, std::size_t c) {
    return rdm_two_site(mode_to_edge(core_to_mode(block_to_core(b, msgs, c, 0), Mode::A), bond));
  };

  const auto t0 = Clock::now();
  const Block big = build_block(uc, static_cast<int>(cfg.get_int("represent.oracle_N")));
  std::mt19937_64 orng(derive_seed(seed, "oracle"));
  const DensityMatrix exact = rdm(big, init_messages(big, cfg.get_size("bp.init_bond"), orng), cfg.get_chi("represent.oracle_chi"));
  log << "[kbp] oracle with " << big.site_count() << " tensors in " << ms_since(t0) / 1000.0 << " s\n";

  std::vector<RepresentRow> rows;
  for (const auto& method : cfg.get_list("represent.methods")) {
    for (const auto& size : cfg.get_list("represent.sizes")) {
      RepresentRow row;
      row.method = method;
      row.N = std::stoi(size);
      const auto t1 = Clock::now();
      const Block b = build_block(uc, row.N);
      row.tensors = b.site_count();
      DensityMatrix rho;
      if (method == "blockbp") {
        BlockBPResult r = blockbp_run(b, bp_config(cfg));
        row.bp_iterations = r.iterations;
        rho = rdm(b, r.messages, chi);
      } else {
        std::mt19937_64 rng(derive_seed(seed, "random_environment"));
        rho = rdm(b, init_messages(b, cfg.get_size("bp.init_bond"), rng), chi);
      }
      row.wall_ms = ms_since(t1);
      row.one_minus_fidelity = std::max(0.0, 1.0 - fidelity(rho, exact));
      log << "[kbp] " << method << " N=" << row.N << " 1-F " << row.one_minus_fidelity << '\n';
      rows.push_back(row);
    }
  }
  return rows;
}

void write_represent_csv(std::ostream& out, const std::vector<RepresentRow>& rows, bool with_timing) {
  out << "method,N,tensors,bp_iterations,one_minus_fidelity" << (with_timing ? ",wall_ms" : "") << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << r.N << ',' << r.tensors << ',' << r.bp_iterations << ',' << std::setprecision(12)
        << r.one_minus_fidelity;
    if (with_timing) out << ',' << std::setprecision(6) << r.wall_ms;
    out << '\n';
  }
}

int cmd_represent(const RunConfig& cfg, std::ostream& log) {
  const auto rows = represent_rows(cfg, initial_unit_cell(cfg), log);
  std::ofstream csv = open_output(output_file(cfg, "represent.csv"));
  write_represent_csv(csv, rows);
  return 0;
}

int cmd_validate_config(const RunConfig&, std::ostream& log) {
  log << "[kbp] configuration is valid\n";
  return 0;
}

// ---------------------------------------------------------------------------------------------
// Command line

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block belief propagation on the infinite kagome lattice", "kbp"};
  app.require_subcommand(1);
  std::string config_file;
  std::vector<std::string> assignments;
  bool quiet = false;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const RunConfig&, std::ostream&);
  };
  const std::vector<Command> commands{
      {"ite", "imaginary time evolution; writes the run log, a checkpoint and a summary", cmd_ite},
      {"bp", "BlockBP on a kagome block, or BP on tn_file; writes per-iteration distances", cmd_bp},
      {"contract", "boundary MPS contraction of tn_file; writes the scalar as JSON", cmd_contract},
      {"represent", "1 - fidelity of BlockBP and random environments against a large block", cmd_represent},
      {"validate-config", "check and print the configuration", cmd_validate_config},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("-c,--config", config_file, "key = value configuration file");
    sub->add_option("-s,--set", assignments, "override one key, key=value")->allow_extra_args(false);
    sub->add_flag("-q,--quiet", quiet, "do not print the configuration");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    if (!config_file.empty()) cfg.load_file(config_file);
    cfg.apply_environment();
    for (const auto& a : assignments) cfg.assign(a, "--set");
    cfg.validate();
  } catch (const Error& e) {
    err << "kbp: " << e.what() << '\n';
    return 2;
  }
  if (!quiet || name == "validate-config") out << "# kbp " << name << " configuration\n" << cfg.dump() << std::flush;
  try {
    for (const auto& c : commands)
      if (name == c.name) return c.run(cfg, out);
  } catch (const ConfigError& e) {
    err << "kbp: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "kbp: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace kbp::cli
