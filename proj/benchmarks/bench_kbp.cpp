#include <benchmark/benchmark.h>

#include <random>

#include "kbp/belief_propagation.hpp"
#include "kbp/ite.hpp"
#include "kbp/kagome_block.hpp"
#include "kbp/mps.hpp"
#include "kbp/operators.hpp"
#include "kbp/reductions.hpp"
#include "kbp/tensor.hpp"

using namespace kbp;

namespace {

void BM_Contract(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  Tensor a = Tensor::random({"i", "j", "k"}, {n, n, 4}, rng);
  Tensor b = Tensor::random({"k", "j", "l"}, {4, n, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(contract(a, {"j", "k"}, b, {"j", "k"}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Contract)->RangeMultiplier(2)->Range(8, 64);

void BM_SvdSplit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  Tensor t = Tensor::random({"a", "p", "b"}, {n, 4, n}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(svd_split(t, {"a", "p"}, n, "x"));
}
BENCHMARK(BM_SvdSplit)->RangeMultiplier(2)->Range(8, 64);

void BM_MpsCompress(benchmark::State& state) {
  const auto chi = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  MPS m = MPS::random(std::vector<std::size_t>(12, 4), 2 * chi, rng);
  for (auto _ : state) benchmark::DoNotOptimize(compress(m, chi));
}
BENCHMARK(BM_MpsCompress)->Arg(4)->Arg(8)->Arg(16)->Arg(32);

struct KagomeFixture {
  Block block;
  std::vector<MPS> messages;
  explicit KagomeFixture(std::size_t chi) {
    std::mt19937_64 rng(4);
    block = build_block(UnitCell::random(kagome_lattice(), 2, 2, rng), 2);
    BPConfig cfg;
    cfg.chi = chi;
    cfg.threshold = 1e-5;
    messages = blockbp_run(block, cfg).messages;
  }
};

void BM_OutgoingMessage(benchmark::State& state) {
  const auto chi = static_cast<std::size_t>(state.range(0));
  static KagomeFixture fx(8);
  for (auto _ : state) benchmark::DoNotOptimize(outgoing_message(fx.block, fx.messages, 0, chi));
}
BENCHMARK(BM_OutgoingMessage)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_BlockToEdge(benchmark::State& state) {
  static KagomeFixture fx(8);
  for (auto _ : state) {
    CoreTN core = block_to_core(fx.block, fx.messages, 8, 0);
    benchmark::DoNotOptimize(mode_to_edge(core_to_mode(core, Mode::A), "in_UR"));
  }
}
BENCHMARK(BM_BlockToEdge)->Unit(benchmark::kMillisecond);

void BM_AlsUpdate(benchmark::State& state) {
  static KagomeFixture fx(8);
  const bool reduced = state.range(0) != 0;
  EdgeTN e = mode_to_edge(core_to_mode(block_to_core(fx.block, fx.messages, 8, 0), Mode::A), "in_UR");
  Tensor gate = build_gate(heisenberg_term(), 0.1);
  ALSConfig cfg;
  cfg.use_reduced_env = reduced;
  for (auto _ : state) benchmark::DoNotOptimize(als_update(e, gate, cfg));
}
BENCHMARK(BM_AlsUpdate)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
