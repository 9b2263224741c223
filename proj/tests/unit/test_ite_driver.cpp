#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "fixtures.hpp"
#include "kbp/error.hpp"
#include "kbp/ite_driver.hpp"
#include "kbp/observables.hpp"

using namespace kbp;
using kbp::testing::relative_difference;

namespace {

KagomeOptions small_options(std::uint64_t seed) {
  KagomeOptions o;
  o.bp.chi = 4;
  o.bp.threshold = 1e-5;
  o.seed = seed;
  return o;
}

std::string csv_of(const RunLog& log) {
  std::ostringstream s;
  log.write_csv(s, false);
  return s.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("kbp_test_" + name);
}

}  // namespace

TEST(DeriveSeed, ComponentsAreIndependent) {
  EXPECT_EQ(derive_seed(5, "mode"), derive_seed(5, "mode"));
  EXPECT_NE(derive_seed(5, "mode"), derive_seed(5, "rotation"));
  EXPECT_NE(derive_seed(5, "mode"), derive_seed(6, "mode"));
}

TEST(SingleBond, ReachesSinglet) {
  SingleBondSystem sys(heisenberg_term("b"), 2, 1);
  RunLog log(sys.bonds());
  IteResult r = full_ite(sys, std::vector<double>(100, 0.1), IteConfig{}, log);
  EXPECT_NEAR(r.final.energies[0], -0.75, 1e-4);
  EXPECT_NEAR(r.final.negativities[0], 0.5, 1e-3);
  EXPECT_EQ(r.applications, 100u);
  EXPECT_EQ(log.rows().size(), 100u);
}

TEST(SingleBond, EnergyDecreasesOnceSettled) {
  SingleBondSystem sys(heisenberg_term("b"), 2, 4);
  RunLog log(sys.bonds());
  full_ite(sys, std::vector<double>(40, 0.05), IteConfig{}, log);
  for (std::size_t k = 6; k < log.rows().size(); ++k) {
    EXPECT_LE(log.rows()[k].measured.energies[0], log.rows()[k - 1].measured.energies[0] + 1e-12) << k;
  }
}

TEST(SingleBond, EmptyScheduleChangesNothing) {
  SingleBondSystem sys(heisenberg_term("b"), 2, 2);
  Tensor before = sys.ket(0);
  RunLog log(sys.bonds());
  IteResult r = full_ite(sys, {}, IteConfig{}, log);
  EXPECT_EQ(r.applications, 0u);
  EXPECT_TRUE(log.rows().empty());
  EXPECT_EQ(relative_difference(sys.ket(0), before), 0.0);
}

TEST(SingleBond, RejectsUnknownEdge) {
  SingleBondSystem sys(heisenberg_term("b"), 2, 2);
  EXPECT_THROW(sys.apply("x", 0.1, ALSConfig{}), UnknownEdge);
}

TEST(SingleBond, CheckpointResumeMatchesStraightRun) {
  const std::vector<double> dts{0.2, 0.1, 0.05};
  SingleBondSystem a(heisenberg_term("b"), 2, 9);
  RunLog la(a.bonds());
  IteConfig cfg;
  cfg.noise_sigma = 0.01;
  full_ite(a, dts, cfg, la);

  const auto path = temp_path("single.json");
  SingleBondSystem b(heisenberg_term("b"), 2, 9);
  RunLog lb(b.bonds());
  IteConfig cp = cfg;
  cp.checkpoint_every = 1;
  cp.checkpoint_path = path;
  // Stop after the second application by throwing from the row callback.
  struct Stop {};
  try {
    full_ite(b, dts, cp, lb, [](const RunLog&, const RunLogRow& row) {
      if (row.step == 2) throw Stop{};
    });
  } catch (const Stop&) {
  }
  SingleBondSystem c(heisenberg_term("b"), 2, 77);
  IteProgress p = read_checkpoint(path, c);
  EXPECT_EQ(p.step, 2u);
  RunLog lc(c.bonds());
  full_ite(c, dts, cfg, lc, {}, p);
  std::filesystem::remove(path);

  ASSERT_EQ(lc.rows().size(), la.rows().size() - 2);
  for (std::size_t k = 0; k < lc.rows().size(); ++k) {
    EXPECT_NEAR(lc.rows()[k].measured.energies[0], la.rows()[k + 2].measured.energies[0], 1e-10);
  }
  EXPECT_LT(relative_difference(c.ket(0), a.ket(0)), 1e-10);
  EXPECT_LT(relative_difference(c.ket(1), a.ket(1)), 1e-10);
}

TEST(Checkpoint, RejectsOtherKind) {
  const auto path = temp_path("kind.json");
  SingleBondSystem s(heisenberg_term("b"), 2, 1);
  write_checkpoint(path, s, IteProgress{});
  KagomeSystem k(heisenberg_term(), small_options(1));
  EXPECT_THROW(read_checkpoint(path, k), FormatError);
  std::filesystem::remove(path);
}

TEST(RunLog, ColumnsFollowBonds) {
  RunLog log({"a", "b"});
  EXPECT_EQ(log.header(), "step,dt,edge,energy_mean,e_a,e_b,sx,sy,sz,neg_a,neg_b,bp_iterations,wall_ms");
  EXPECT_EQ(log.header(false), "step,dt,edge,energy_mean,e_a,e_b,sx,sy,sz,neg_a,neg_b,bp_iterations");
  RunLogRow row;
  row.step = 3;
  row.dt = 0.5;
  row.edge = "a";
  row.measured.energies = {-1.0, 0.5};
  row.measured.negativities = {0.1, 0.2};
  EXPECT_EQ(log.format(row, false), "3,0.5,a,-0.25,-1,0.5,0,0,0,0.1,0.2,0");
}

TEST(KagomeSystem, TensorsReachEveryCopy) {
  KagomeSystem sys(heisenberg_term(), small_options(2));
  sys.apply("in_UL", 0.1, ALSConfig{});
  const Block& b = sys.block();
  for (std::size_t i = 0; i < b.site_count(); ++i) {
    Tensor want = b.unit_cell.tensors[static_cast<std::size_t>(b.sites[i].role)];
    Tensor got = b.site_tensor(i);
    for (std::size_t k = 0; k < b.sites[i].edges.size(); ++k) got = got.renamed(b.sites[i].edges[k], b.sites[i].role_legs[k]);
    EXPECT_EQ(relative_difference(got, want), 0.0) << i;
  }
}

TEST(KagomeSystem, GateLowersTheBondEnergy) {
  KagomeSystem sys(heisenberg_term(), small_options(3));
  Measurement before = sys.measure();
  for (const auto& e : kagome_bonds()) sys.apply(e, 0.2, ALSConfig{});
  Measurement after = sys.measure();
  EXPECT_LT(after.energy_mean(), before.energy_mean());
}

TEST(KagomeSystem, SameSeedSameCsv) {
  auto run = [](std::uint64_t seed) {
    KagomeSystem sys(heisenberg_term(), small_options(seed));
    RunLog log(sys.bonds());
    IteConfig cfg;
    cfg.noise_sigma = 1e-3;
    full_ite(sys, {0.1}, cfg, log);
    return csv_of(log);
  };
  const std::string a = run(4);
  EXPECT_EQ(a, run(4));
}

TEST(KagomeSystem, CheckpointResumeMatchesStraightRun) {
  const std::vector<double> dts{0.1};
  KagomeSystem a(heisenberg_term(), small_options(6));
  RunLog la(a.bonds());
  full_ite(a, dts, IteConfig{}, la);

  const auto path = temp_path("kagome.json");
  KagomeSystem b(heisenberg_term(), small_options(6));
  RunLog lb(b.bonds());
  IteConfig cp;
  cp.checkpoint_every = 4;
  cp.checkpoint_path = path;
  struct Stop {};
  try {
    full_ite(b, dts, cp, lb, [](const RunLog&, const RunLogRow& row) {
      if (row.step == 5) throw Stop{};
    });
  } catch (const Stop&) {
  }
  KagomeSystem c(heisenberg_term(), small_options(99));
  IteProgress p = read_checkpoint(path, c);
  std::filesystem::remove(path);
  EXPECT_EQ(p.step, 4u);
  RunLog lc(c.bonds());
  full_ite(c, dts, IteConfig{}, lc, {}, p);
  ASSERT_EQ(lc.rows().size() + 4, la.rows().size());
  for (std::size_t k = 0; k < lc.rows().size(); ++k) {
    EXPECT_NEAR(lc.rows()[k].measured.energy_mean(), la.rows()[k + 4].measured.energy_mean(), 1e-10) << k;
  }
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_LT(relative_difference(c.block().unit_cell.tensors[r], a.block().unit_cell.tensors[r]), 1e-10);
  }
}

TEST(KagomeSystem, ValidatesOptions) {
  KagomeOptions o = small_options(1);
  o.d = 3;
  EXPECT_THROW(KagomeSystem(heisenberg_term(), o), ConfigError);
  KagomeSystem sys(heisenberg_term(), small_options(1));
  ALSConfig als;
  als.D = 3;
  EXPECT_THROW(sys.apply("in_UL", 0.1, als), ConfigError);
}

TEST(Rotation, RotatedStateAndCoreGiveTheSameEnergies) {
  std::mt19937_64 rng(12);
  const Lattice lat = kagome_lattice();
  Block b = build_block(UnitCell::random(lat, 2, 2, rng), 2);
  std::vector<MPS> msgs = init_messages(b, 2, rng);
  const BondTerm h = heisenberg_term();
  std::map<std::string, double> ref;
  for (int steps = 0; steps < 3; ++steps) {
    Block rb = steps ? rotate_block(b, 120 * steps) : b;
    std::vector<MPS> rm = steps ? rotate_messages(b, msgs, steps) : msgs;
    ModeTN mode = core_to_mode(block_to_core(rb, rm, kUnlimited, static_cast<std::size_t>(steps)), Mode::A);
    auto legs = rotation_leg_map(lat, steps);
    double total = 0.0;
    for (const auto& bond : kagome_bonds()) {
      const double e = bond_energy(rdm_two_site(mode_to_edge(mode, legs.at(bond))), h);
      total += e;
      if (steps == 0) {
        ref[bond] = e;
      } else {
        EXPECT_NEAR(e, ref[bond], 1e-8) << bond << " " << steps;
      }
    }
    EXPECT_TRUE(std::isfinite(total));
  }
}
