#include <benchmark/benchmark.h>

#include <vector>

#include "graphrt/exec_graph.hpp"
#include "graphrt/virtual_device.hpp"

using namespace graphrt;

namespace {

// Spec-only kernels: measures scheduler bookkeeping, not math.
std::vector<KernelInvocation> fake_plan(int kernels) {
  std::vector<KernelInvocation> plan;
  plan.reserve(static_cast<std::size_t>(kernels));
  for (int i = 0; i < kernels; ++i) {
    KernelInvocation inv;
    inv.spec = {"bm", OpClass::Static, {}, {}, 1000};
    plan.push_back(inv);
  }
  return plan;
}

CostModel quiet() {
  CostModel cm;
  cm.jitter = JitterKind::None;
  return cm;
}

}  // namespace

static void BM_EagerSubmit(benchmark::State& state) {
  const int kernels = static_cast<int>(state.range(0));
  auto plan = fake_plan(kernels);
  for (auto _ : state) {
    VirtualDevice dev(quiet(), 1);
    for (const auto& inv : plan) dev.submit_kernel(inv);
    benchmark::DoNotOptimize(dev.elapsed());
  }
  state.SetItemsProcessed(state.iterations() * kernels);
}
BENCHMARK(BM_EagerSubmit)->Arg(58)->Arg(580);

static void BM_GraphReplay(benchmark::State& state) {
  const int kernels = static_cast<int>(state.range(0));
  Workspace ws;
  CaptureEngine engine(ws, {});
  auto plan = fake_plan(kernels);
  ExecGraphPtr graph = capture_sequence(engine, 1, plan);
  for (auto _ : state) {
    VirtualDevice dev(quiet(), 1);
    dev.submit_replay(graph);
    benchmark::DoNotOptimize(dev.elapsed());
  }
  state.SetItemsProcessed(state.iterations() * kernels);
}
BENCHMARK(BM_GraphReplay)->Arg(58)->Arg(580);

static void BM_CaptureSequence(benchmark::State& state) {
  const int kernels = static_cast<int>(state.range(0));
  Workspace ws;
  CaptureEngine engine(ws, {});
  auto plan = fake_plan(kernels);
  for (auto _ : state) {
    ExecGraphPtr graph = capture_sequence(engine, 1, plan);
    benchmark::DoNotOptimize(graph->kernel_count());
  }
  state.SetItemsProcessed(state.iterations() * kernels);
}
BENCHMARK(BM_CaptureSequence)->Arg(58);
