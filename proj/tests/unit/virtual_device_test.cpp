#include <cmath>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "graphrt/bench.hpp"
#include "graphrt/virtual_device.hpp"
#include "test_util.hpp"

using namespace graphrt;

namespace {

CostModel flat(double launch, double host, double alpha, double capture = 2.0) {
  CostModel c;
  c.launch_overhead_us = launch;
  c.host_dispatch_us = host;
  c.alpha_us_per_mflop = alpha;
  c.capture_us_per_kernel = capture;
  c.jitter = JitterKind::None;
  return c;
}

KernelInvocation fake(const char* name, OpClass cls, std::int64_t flops) {
  KernelInvocation inv;
  inv.spec = {name, cls, {}, {}, flops};
  return inv;
}

struct GraphRig {
  Workspace ws;
  CaptureEngine engine{ws, {}};
  ExecGraphPtr graph_of(int key, int kernels, std::int64_t flops_each) {
    std::vector<KernelInvocation> invs;
    for (int i = 0; i < kernels; ++i) invs.push_back(fake("k", OpClass::Static, flops_each));
    return capture_sequence(engine, key, invs);
  }
};

}  // namespace

TEST_CASE("device: single kernel closed form") {
  // 5us launch + 1.0us/MFLOP * 1 MFLOP = 6us, no host cost.
  VirtualDevice dev(flat(5, 0, 1), 1);
  CHECK(dev.elapsed() == 0.0);
  dev.submit_kernel(fake("k", OpClass::Static, 1000000));
  CHECK(dev.elapsed() == doctest::Approx(6.0));
  CHECK(dev.host_now() == doctest::Approx(6.0));  // eager dispatch blocks
  CHECK(dev.busy(StreamId::Replay) == doctest::Approx(6.0));
  CHECK(dev.counters().dispatches == 1);
  CHECK(dev.counters().kernel_launches == 1);
}

TEST_CASE("device: zero-flop kernel costs the launch overhead, host cost shifts it") {
  VirtualDevice a(flat(5, 0, 1), 1);
  a.submit_kernel(fake("k", OpClass::Static, 0));
  CHECK(a.elapsed() == doctest::Approx(5.0));

  VirtualDevice b(flat(5, 8, 1), 1);
  b.submit_kernel(fake("k", OpClass::Static, 0));
  CHECK(b.elapsed() == doctest::Approx(13.0));  // dispatch then launch
}

TEST_CASE("device: stream FIFO, the second kernel starts at the first one's end") {
  VirtualDevice dev(flat(5, 0, 1), 1);
  dev.set_trace(true);
  dev.submit_kernel(fake("k1", OpClass::Static, 1000000));
  dev.submit_kernel(fake("k2", OpClass::Static, 1000000));
  CHECK(dev.elapsed() == doctest::Approx(12.0));
  REQUIRE(dev.trace().size() >= 4);
  const TraceRecord& first = dev.trace()[1];
  const TraceRecord& second = dev.trace()[3];
  CHECK(first.kind == TraceKind::Kernel);
  CHECK(second.ts_us == doctest::Approx(first.ts_us + first.duration_us));
}

TEST_CASE("device: fusing dynamic ops pays one dispatch instead of three") {
  std::vector<KernelInvocation> ops;
  for (int i = 0; i < 3; ++i) ops.push_back(fake("d", OpClass::Dynamic, 0));

  VirtualDevice eager(flat(5, 8, 0), 1);
  for (const auto& op : ops) eager.submit_kernel(op);
  CHECK(eager.elapsed() == doctest::Approx(39.0));  // 3 * (8 + 5), serialized by the host
  CHECK(eager.counters().dispatches == 3);
  CHECK(eager.counters().fused_blocks == 0);

  VirtualDevice fused(flat(5, 8, 0), 1);
  fused.submit_fused_block(ops);
  CHECK(fused.busy(StreamId::Replay) == doctest::Approx(23.0));  // 8 + 3 * 5, members chain
  CHECK(fused.host_now() == doctest::Approx(8.0));               // block is asynchronous
  CHECK(fused.counters().dispatches == 1);
  CHECK(fused.counters().fused_blocks == 1);
  CHECK(fused.counters().kernel_launches == 3);
}

TEST_CASE("device: fused blocks refuse static members, empty block is free") {
  VirtualDevice dev(flat(5, 8, 0), 1);
  std::vector<KernelInvocation> bad{fake("s", OpClass::Static, 0)};
  CHECK_RAISES(Errc::StaticInFusedBlock, dev.submit_fused_block(bad));

  std::vector<KernelInvocation> none;
  dev.submit_fused_block(none);
  CHECK(dev.elapsed() == 0.0);
  CHECK(dev.counters().dispatches == 0);
}

TEST_CASE("device: replay collapses a kernel sequence into one launch") {
  // The worked example: three 1e6-flop kernels, launch 5, alpha 1.
  GraphRig rig;
  auto graph = rig.graph_of(3, 3, 1000000);

  VirtualDevice eager(flat(5, 0, 1), 1);
  for (const auto& inv : graph->kernels()) eager.submit_kernel(inv);
  CHECK(eager.elapsed() == doctest::Approx(18.0));

  VirtualDevice fast(flat(5, 0, 1), 1);
  fast.submit_replay(graph);
  CHECK(fast.elapsed() == doctest::Approx(8.0));  // 5 + alpha * 3 MFLOP
  CHECK(fast.counters().dispatches == 1);
  CHECK(fast.counters().graph_replays == 1);
  CHECK(fast.counters().kernel_launches == 0);

  // Replay is asynchronous: the host only pays the dispatch.
  VirtualDevice async(flat(5, 8, 1), 1);
  async.submit_replay(graph);
  CHECK(async.host_now() == doctest::Approx(8.0));
  CHECK(async.busy(StreamId::Replay) == doctest::Approx(16.0));
  async.sync_host_to(StreamId::Replay);
  CHECK(async.host_now() == doctest::Approx(16.0));
}

TEST_CASE("device: capture occupies its target stream and parks the graph") {
  GraphRig rig;
  std::vector<KernelInvocation> plan;
  for (int i = 0; i < 3; ++i) plan.push_back(fake("k", OpClass::Static, 1000000));

  VirtualDevice dev(flat(5, 8, 1, 2), 1);
  dev.submit_capture(rig.engine, 9, plan, StreamId::Capture);
  CHECK(dev.host_now() == 0.0);  // no host charge
  CHECK(dev.busy(StreamId::Capture) == doctest::Approx(6.0));  // 2us * 3 kernels
  CHECK(dev.counters().captures == 1);

  CHECK(dev.take_ready_captures().empty());  // host has not reached 6us
  dev.sync_all();
  auto ready = dev.take_ready_captures();
  REQUIRE(ready.size() == 1);
  CHECK(ready[0].length_key == 9);
  CHECK(ready[0].graph->kernel_count() == 3);
  CHECK(ready[0].ready_at_us == doctest::Approx(6.0));
  CHECK(dev.take_ready_captures().empty());  // delivered exactly once
}

TEST_CASE("device: capture off-stream overlaps compute, on-stream serializes") {
  GraphRig rig;
  auto graph = rig.graph_of(4, 3, 1000000);  // replay duration 8
  std::vector<KernelInvocation> plan;
  for (int i = 0; i < 3; ++i) plan.push_back(fake("k", OpClass::Static, 1000000));

  VirtualDevice overlap(flat(5, 0, 1, 2), 1);
  overlap.submit_replay(graph);
  overlap.submit_capture(rig.engine, 5, plan, StreamId::Capture);
  CHECK(overlap.elapsed() == doctest::Approx(8.0));  // max(8, 6)

  VirtualDevice serial(flat(5, 0, 1, 2), 1);
  serial.submit_replay(graph);
  serial.submit_capture(rig.engine, 5, plan, StreamId::Replay);
  CHECK(serial.elapsed() == doctest::Approx(14.0));  // 8 + 6
}

TEST_CASE("device: events order cross-stream work without advancing time") {
  GraphRig rig;
  auto graph = rig.graph_of(4, 3, 1000000);
  std::vector<KernelInvocation> plan;
  for (int i = 0; i < 3; ++i) plan.push_back(fake("k", OpClass::Static, 1000000));

  VirtualDevice dev(flat(5, 0, 1, 2), 1);
  dev.submit_replay(graph);  // busy[REP] = 8
  EventId ev = dev.record_event(StreamId::Replay);
  dev.wait_event(StreamId::Capture, ev);
  CHECK(dev.busy(StreamId::Capture) == doctest::Approx(8.0));
  dev.submit_capture(rig.engine, 5, plan, StreamId::Capture);
  CHECK(dev.busy(StreamId::Capture) == doctest::Approx(14.0));  // waits, then 6

  // Waiting on an event already in the past never rewinds a stream.
  EventId late = dev.record_event(StreamId::Replay);  // ts 8
  dev.wait_event(StreamId::Capture, late);
  CHECK(dev.busy(StreamId::Capture) == doctest::Approx(14.0));

  CHECK_RAISES(Errc::UnknownEvent, dev.wait_event(StreamId::Replay, 999));
}

TEST_CASE("device: jitter streams are a pure function of the seed") {
  CostModel cm = flat(5, 8, 0.01);
  cm.jitter = JitterKind::Lognormal;
  cm.jitter_sigma = 0.25;

  auto run = [&](std::uint64_t seed) {
    VirtualDevice dev(cm, seed);
    for (int i = 0; i < 20; ++i) dev.submit_kernel(fake("k", OpClass::Static, 10000));
    return dev.elapsed();
  };
  CHECK(run(7) == run(7));
  CHECK(run(7) != run(8));
}

TEST_CASE("device: lognormal jitter matches its analytic quantiles") {
  CostModel cm = flat(0, 0, 0);  // durations are pure jitter draws
  cm.jitter = JitterKind::Lognormal;
  cm.jitter_sigma = 0.25;
  VirtualDevice dev(cm, 424242);
  dev.set_trace(true);
  const int n = 20000;
  for (int i = 0; i < n; ++i) dev.submit_kernel(fake("k", OpClass::Static, 0));
  std::vector<double> durs;
  for (const TraceRecord& r : dev.trace())
    if (r.kind == TraceKind::Kernel) durs.push_back(r.duration_us);
  REQUIRE(static_cast<int>(durs.size()) == n);

  const double p50 = percentile(durs, 50.0);
  const double p99 = percentile(durs, 99.0);
  const double z99 = 2.3263478740408408;  // standard normal 99th percentile
  CHECK(p50 == doctest::Approx(1.0).epsilon(0.05));              // median of exp(sigma Z)
  CHECK(p99 / p50 == doctest::Approx(std::exp(0.25 * z99)).epsilon(0.05));
}

TEST_CASE("device: stop refuses further work, bad inputs are rejected") {
  VirtualDevice dev(flat(5, 8, 0.01), 1);
  dev.submit_kernel(fake("k", OpClass::Static, 0));
  dev.stop();
  CHECK(dev.stopped());
  CHECK_RAISES(Errc::DeviceStopped, dev.submit_kernel(fake("k", OpClass::Static, 0)));
  CHECK_RAISES(Errc::DeviceStopped, dev.sync_all());
  CHECK(dev.elapsed() > 0.0);  // queries stay valid

  VirtualDevice ok(flat(5, 8, 0.01), 1);
  CHECK_RAISES(Errc::InvalidConfig, ok.advance_host(-1.0));
  CostModel bad = flat(-5, 8, 0.01);
  CHECK_RAISES(Errc::InvalidConfig, VirtualDevice(bad, 1));
}

TEST_CASE("device: trace export carries rows and counter trailers") {
  VirtualDevice dev(flat(5, 8, 0.01), 1);
  dev.set_trace(true);
  dev.submit_kernel(fake("alpha", OpClass::Static, 0));
  dev.sync_all();
  std::ostringstream os;
  dev.export_trace(os);
  const std::string text = os.str();
  CHECK(text.find("ts_us,stream,kind,id,duration_us") == 0);
  CHECK(text.find("alpha") != std::string::npos);
  CHECK(text.find("# dispatches=1") != std::string::npos);
  CHECK(text.find("# elapsed_us=") != std::string::npos);
}
