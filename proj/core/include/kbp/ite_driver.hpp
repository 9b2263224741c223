#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kbp/belief_propagation.hpp"
#include "kbp/ite.hpp"
#include "kbp/kagome_block.hpp"
#include "kbp/reductions.hpp"

namespace kbp {

// Independent stream for one component of a run, derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component);

struct Measurement {
  std::vector<double> energies;  // one per measured bond
  std::array<double, 3> magnetization{};  // mean over sites
  std::vector<double> negativities;
  double energy_mean() const;
};

struct StepReport {
  Measurement measured;  // state the gate acted on
  std::size_t bp_iterations = 0;
  bool bp_converged = true;
  ALSResult als;
};

// Everything needed to resume a system bit for bit.
struct SystemState {
  std::vector<Tensor> tensors;
  std::vector<MPS> messages;
  bool messages_hermitized = false;
  std::map<std::string, std::string> rng;  // serialized engines by component
};

class IteSystem {
 public:
  virtual ~IteSystem() = default;
  virtual std::string kind() const = 0;
  virtual std::vector<TermGroup> groups() const = 0;
  // Measured bonds in log column order.
  virtual std::vector<std::string> bonds() const = 0;
  // Sites per unit cell, for energies per site.
  virtual double sites_per_cell() const = 0;
  virtual StepReport apply(const std::string& edge, double dt, const ALSConfig& als) = 0;
  virtual Measurement measure() = 0;
  virtual void perturb(double sigma) = 0;
  virtual SystemState state() const = 0;
  virtual void restore(const SystemState& s) = 0;
};

// Two sites joined by one bond, nothing else around them.
class SingleBondSystem : public IteSystem {
 public:
  SingleBondSystem(BondTerm term, std::size_t D, std::uint64_t seed);
  std::string kind() const override { return "single_bond"; }
  std::vector<TermGroup> groups() const override;
  std::vector<std::string> bonds() const override { return {term_.edge}; }
  double sites_per_cell() const override { return 2.0; }
  StepReport apply(const std::string& edge, double dt, const ALSConfig& als) override;
  Measurement measure() override;
  void perturb(double sigma) override;
  SystemState state() const override;
  void restore(const SystemState& s) override;

  const Tensor& ket(int k) const { return kets_[k]; }

 private:
  EdgeTN edge() const;
  BondTerm term_;
  std::array<Tensor, 2> kets_;
  std::mt19937_64 noise_rng_;
};

struct KagomeOptions {
  int N = 2;
  std::size_t d = 2;
  std::size_t D = 2;
  BPConfig bp;  // bp.chi is also the truncation of the block-to-core contraction
  bool shuffle_modes = true;
  bool rotate = true;
  std::uint64_t seed = 0;
};

// Hexagonal block with one 3-site unit cell, environment from BlockBP.
class KagomeSystem : public IteSystem {
 public:
  KagomeSystem(BondTerm prototype, KagomeOptions options, std::optional<UnitCell> initial = std::nullopt);
  std::string kind() const override { return "kagome"; }
  std::vector<TermGroup> groups() const override;
  std::vector<std::string> bonds() const override { return kagome_bonds(); }
  double sites_per_cell() const override { return 3.0; }
  StepReport apply(const std::string& edge, double dt, const ALSConfig& als) override;
  Measurement measure() override;
  void perturb(double sigma) override;
  SystemState state() const override;
  void restore(const SystemState& s) override;

  const Block& block() const { return block_; }
  const std::vector<MPS>& messages() const { return messages_; }

 private:
  BlockBPResult converge(const Block& b, const std::vector<MPS>& msgs);
  Measurement measure_mode(const ModeTN& mode, int steps) const;
  BondTerm prototype_;
  KagomeOptions opt_;
  Block block_;
  std::vector<MPS> messages_;
  bool hermitized_ = false;  // messages come from a hermitizing BlockBP run
  std::mt19937_64 mode_rng_;
  std::mt19937_64 rotation_rng_;
  std::mt19937_64 noise_rng_;
};

struct RunLogRow {
  std::size_t step = 0;  // gate application index
  double dt = 0.0;
  std::string edge;
  Measurement measured;
  std::size_t bp_iterations = 0;
  double wall_ms = 0.0;
};

// Columns: step, dt, edge, energy_mean, e_<bond>..., sx, sy, sz, neg_<bond>..., bp_iterations, wall_ms.
class RunLog {
 public:
  explicit RunLog(std::vector<std::string> bonds) : bonds_(std::move(bonds)) {}
  const std::vector<std::string>& bonds() const { return bonds_; }
  const std::vector<RunLogRow>& rows() const { return rows_; }
  void append(RunLogRow row) { rows_.push_back(std::move(row)); }
  std::string header(bool with_timing = true) const;
  std::string format(const RunLogRow& row, bool with_timing = true) const;
  void write_csv(std::ostream& out, bool with_timing = true) const;

 private:
  std::vector<std::string> bonds_;
  std::vector<RunLogRow> rows_;
};

struct IteConfig {
  ALSConfig als;
  double noise_sigma = 0.0;  // Gaussian noise added before every time step
  std::size_t checkpoint_every = 0;  // gate applications; 0 disables
  std::filesystem::path checkpoint_path;
};

struct IteResult {
  Measurement final;  // measured after the last application
  double best_energy = 0.0;  // lowest energy per site over the logged measurements
  std::size_t applications = 0;
  std::size_t bp_failures = 0;  // applications whose BlockBP did not converge
  double wall_seconds = 0.0;
};

// Progress of a run, stored in checkpoints.
struct IteProgress {
  std::size_t dt_index = 0;
  std::size_t application = 0;  // inside the current sweep
  std::size_t step = 0;          // total applications so far
  double best_energy = 0.0;
  std::size_t bp_failures = 0;
};

using RowCallback = std::function<void(const RunLog&, const RunLogRow&)>;

// Second-order Trotter sweeps for every dt. Rows are appended to `log`; `on_row` sees each one.
IteResult full_ite(IteSystem& system, const std::vector<double>& dt_list, const IteConfig& cfg, RunLog& log,
                   const RowCallback& on_row = {}, std::optional<IteProgress> resume = std::nullopt);

// energy_mean * bonds / sites: sum of bond energies per unit cell over its sites.
double energy_per_site(const IteSystem& system, const Measurement& m);

void write_checkpoint(const std::filesystem::path& path, const IteSystem& system, const IteProgress& progress);
// Restores the system and returns where to continue. Throws FormatError on mismatched kind.
IteProgress read_checkpoint(const std::filesystem::path& path, IteSystem& system);
// Unit-cell tensors stored in a checkpoint, for starting a new run from them.
std::vector<Tensor> read_checkpoint_tensors(const std::filesystem::path& path);

}  // namespace kbp
