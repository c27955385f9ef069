#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "graphrt/exec_graph.hpp"
#include "graphrt/kernels.hpp"

namespace graphrt {

// Two hardware queues: Replay is the compute stream (eager kernels, fused
// dynamic blocks, and graph replays all run there); Capture is the side
// stream graph construction normally runs on so it overlaps compute.
enum class StreamId : int { Replay = 0, Capture = 1 };
inline constexpr int kStreamCount = 2;

enum class JitterKind { None, Lognormal };

// Cost model for the virtual clock, in microseconds.
//   launch_overhead_us   fixed cost per device-side launch (kernel or graph)
//   host_dispatch_us     host-side cost per submission (kernel, block, replay)
//   alpha_us_per_mflop   compute time per million flops
//   capture_us_per_kernel  graph construction cost per recorded kernel
//   jitter               per-launch noise J = exp(sigma * Z) us with
//                        Z ~ N(0,1); None means J = 0 exactly
struct CostModel {
  double launch_overhead_us = 5.0;
  double host_dispatch_us = 8.0;
  double alpha_us_per_mflop = 0.01;
  double capture_us_per_kernel = 2.0;
  JitterKind jitter = JitterKind::Lognormal;
  double jitter_sigma = 0.25;
};

struct Counters {
  std::uint64_t dispatches = 0;       // host dispatch charges paid
  std::uint64_t kernel_launches = 0;  // individual kernels (eager + fused members)
  std::uint64_t fused_blocks = 0;
  std::uint64_t graph_replays = 0;
  std::uint64_t captures = 0;
  std::uint64_t events_recorded = 0;
  std::uint64_t events_waited = 0;
};

enum class TraceKind {
  Dispatch,
  Kernel,
  FusedBlock,
  Replay,
  Capture,
  EventRecord,
  EventWait,
  SyncHost,
  SyncAll,
};
const char* trace_kind_name(TraceKind k) noexcept;

// One timeline row. stream is 0 (Replay), 1 (Capture), or -1 for host-side
// records. ts_us is the start of the interval.
struct TraceRecord {
  double ts_us = 0.0;
  int stream = -1;
  TraceKind kind = TraceKind::Dispatch;
  std::string label;
  double duration_us = 0.0;
};

using EventId = std::uint64_t;

// A capture job in flight: the graph already exists (construction is
// validated synchronously at submit), but it is not usable until the capture
// stream reaches ready_at_us.
struct PendingCapture {
  int length_key = 0;
  ExecGraphPtr graph;
  double ready_at_us = 0.0;
};

// Deterministic discrete-event clock for a one-device, two-stream machine.
// Math executes for real at submission; only time is simulated. State is
// host_now plus busy[s] (when stream s drains). All submissions obey stream
// FIFO: work enqueued on s starts at max(host_now, busy[s]).
//
// The exact recurrences (mirrored by the acceptance suite's independent
// calculator; changing these is an observable contract change):
//
//   kernel duration        dur = launch_overhead + J + alpha * flops/1e6
//   submit_kernel          host += host_dispatch;
//                          busy[REP] = max(host, busy[REP]) + dur;
//                          host = busy[REP]             (synchronous: the
//                          host drives each eager kernel to completion, the
//                          interpreter-style dispatch loop)
//   submit_fused_block     host += host_dispatch (once);
//                          t = max(host, busy[REP]);
//                          t += dur_i for each member (each pays its own
//                          launch overhead and jitter draw);
//                          busy[REP] = t; host unchanged (asynchronous)
//   submit_replay          host += host_dispatch;
//                          busy[REP] = max(host, busy[REP])
//                                      + launch_overhead + J
//                                      + alpha * total_flops/1e6;
//                          host unchanged (asynchronous, one launch for the
//                          whole graph)
//   submit_capture         no host charge (background builder);
//                          busy[s] = max(host, busy[s])
//                                    + capture_us_per_kernel * kernel_count
//                          on the chosen target stream s; the finished graph
//                          becomes ready at that completion time
//   record_event           stamps ts = busy[s], no time passes
//   wait_event             busy[s] = max(busy[s], event.ts)
//   sync_host_to           host = max(host, busy[s])
//   sync_all               host = max(host, busy[REP], busy[CAP])
//   elapsed                max(host, busy[REP], busy[CAP])
//
// Jitter draws are consumed one per device-side launch (eager kernel, fused
// member, or graph replay; captures draw none) in submission order from an
// mt19937_64 seeded at construction, so a run is a pure function of
// (submissions, cost model, jitter_seed).
class VirtualDevice {
 public:
  VirtualDevice(CostModel cost, std::uint64_t jitter_seed);

  // Executes the kernel and charges the synchronous eager path.
  void submit_kernel(const KernelInvocation& inv);

  // Executes every member and charges one dispatch for the whole block.
  // Members must all be DYNAMIC (StaticInFusedBlock otherwise); static work
  // belongs in plans/graphs. An empty block is a no-op: nothing charged,
  // nothing counted.
  void submit_fused_block(std::span<const KernelInvocation> block);

  // Executes the graph and charges a single asynchronous launch.
  void submit_replay(const ExecGraphPtr& graph);

  // Validates and constructs the graph now (raises on capture violations),
  // schedules its build cost on `target`, and parks the result until the
  // stream reaches it. Does not execute any kernel math.
  void submit_capture(CaptureEngine& engine, int length_key,
                      std::span<const KernelInvocation> kernels, StreamId target);

  // Captures whose ready time has been reached by the current host clock.
  // Each is returned exactly once.
  std::vector<PendingCapture> take_ready_captures();

  EventId record_event(StreamId s);
  void wait_event(StreamId waiter, EventId ev);  // UnknownEvent if never recorded
  void sync_host_to(StreamId s);
  void sync_all();
  void advance_host(double us);

  double host_now() const noexcept { return host_now_; }
  double busy(StreamId s) const noexcept { return busy_[static_cast<std::size_t>(s)]; }
  double elapsed() const noexcept;

  const Counters& counters() const noexcept { return counters_; }
  const CostModel& cost() const noexcept { return cost_; }

  void set_trace(bool enabled) { trace_enabled_ = enabled; }
  bool trace_enabled() const noexcept { return trace_enabled_; }
  const std::vector<TraceRecord>& trace() const noexcept { return trace_; }
  // CSV: header, one row per record, then `# name=value` counter lines.
  void export_trace(std::ostream& os) const;

  // Refuses all further submissions/syncs with DeviceStopped. Queries stay
  // valid. Guards against work slipping in after a session tears down.
  void stop() noexcept { stopped_ = true; }
  bool stopped() const noexcept { return stopped_; }

 private:
  double draw_jitter();
  double kernel_duration(const KernelSpec& spec);
  void check_running() const;
  void note(double ts, int stream, TraceKind kind, const std::string& label, double dur);

  CostModel cost_;
  std::mt19937_64 jitter_eng_;
  double host_now_ = 0.0;
  std::array<double, kStreamCount> busy_{0.0, 0.0};
  Counters counters_;
  std::map<EventId, double> events_;
  EventId next_event_ = 0;
  std::vector<PendingCapture> pending_;
  bool trace_enabled_ = false;
  std::vector<TraceRecord> trace_;
  bool stopped_ = false;
};

}  // namespace graphrt
