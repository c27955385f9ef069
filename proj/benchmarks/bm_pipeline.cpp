#include <benchmark/benchmark.h>

#include "graphrt/bench.hpp"

using namespace graphrt;

namespace {

// Wall-clock cost of driving a full generation run (real model math plus
// scheduler bookkeeping), per mode. Virtual-device time is what the library
// reports; this measures what the simulation itself costs to run.
void run_mode(benchmark::State& state, RunMode mode) {
  ModelConfig mc;  // default 4x64 model
  CacheConfig cc;
  cc.warmup_hi = 20;
  CostModel cost;
  cost.jitter = JitterKind::None;
  Session session(mc, cc, cost);

  GenerationRequest req;
  req.mode = mode;
  req.prompt = make_prompt(42, 8, mc.vocab_size);
  req.gen_len = 8;

  for (auto _ : state) {
    GenerationResult r = session.run(req);
    benchmark::DoNotOptimize(r.total_us);
  }
  state.SetItemsProcessed(state.iterations() * req.gen_len);
}

}  // namespace

static void BM_GenerateEager(benchmark::State& state) { run_mode(state, RunMode::Eager); }
static void BM_GenerateHybrid(benchmark::State& state) { run_mode(state, RunMode::Hybrid); }
BENCHMARK(BM_GenerateEager);
BENCHMARK(BM_GenerateHybrid);

BENCHMARK_MAIN();
