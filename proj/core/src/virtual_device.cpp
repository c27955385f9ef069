#include "graphrt/virtual_device.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "graphrt/error.hpp"
#include "graphrt/prng.hpp"

namespace graphrt {

const char* trace_kind_name(TraceKind k) noexcept {
  switch (k) {
    case TraceKind::Dispatch: return "dispatch";
    case TraceKind::Kernel: return "kernel";
    case TraceKind::FusedBlock: return "fused_block";
    case TraceKind::Replay: return "replay";
    case TraceKind::Capture: return "capture";
    case TraceKind::EventRecord: return "event_record";
    case TraceKind::EventWait: return "event_wait";
    case TraceKind::SyncHost: return "sync_host";
    case TraceKind::SyncAll: return "sync_all";
  }
  return "?";
}

VirtualDevice::VirtualDevice(CostModel cost, std::uint64_t jitter_seed)
    : cost_(cost), jitter_eng_(jitter_seed) {
  if (cost_.launch_overhead_us < 0 || cost_.host_dispatch_us < 0 ||
      cost_.alpha_us_per_mflop < 0 || cost_.capture_us_per_kernel < 0 ||
      cost_.jitter_sigma < 0) {
    raise(Errc::InvalidConfig, "cost model parameters must be non-negative");
  }
}

void VirtualDevice::check_running() const {
  if (stopped_) raise(Errc::DeviceStopped, "device is stopped");
}

double VirtualDevice::draw_jitter() {
  if (cost_.jitter == JitterKind::None) return 0.0;
  return std::exp(cost_.jitter_sigma * standard_normal(jitter_eng_));
}

double VirtualDevice::kernel_duration(const KernelSpec& spec) {
  return cost_.launch_overhead_us + draw_jitter() +
         cost_.alpha_us_per_mflop * (static_cast<double>(spec.flops) * 1e-6);
}

void VirtualDevice::note(double ts, int stream, TraceKind kind, const std::string& label,
                         double dur) {
  if (trace_enabled_) trace_.push_back({ts, stream, kind, label, dur});
}

void VirtualDevice::submit_kernel(const KernelInvocation& inv) {
  check_running();
  note(host_now_, -1, TraceKind::Dispatch, inv.spec.name, cost_.host_dispatch_us);
  host_now_ += cost_.host_dispatch_us;
  ++counters_.dispatches;

  auto& busy = busy_[static_cast<std::size_t>(StreamId::Replay)];
  const double start = std::max(host_now_, busy);
  const double dur = kernel_duration(inv.spec);
  busy = start + dur;
  host_now_ = busy;
  ++counters_.kernel_launches;
  note(start, 0, TraceKind::Kernel, inv.spec.name, dur);

  if (inv.run) inv.run();
}

void VirtualDevice::submit_fused_block(std::span<const KernelInvocation> block) {
  check_running();
  if (block.empty()) return;
  for (const KernelInvocation& inv : block) {
    if (inv.spec.op_class != OpClass::Dynamic) {
      raise(Errc::StaticInFusedBlock,
            "fused block member '" + inv.spec.name + "' is static; capture it instead");
    }
  }
  note(host_now_, -1, TraceKind::Dispatch, "fused_block", cost_.host_dispatch_us);
  host_now_ += cost_.host_dispatch_us;
  ++counters_.dispatches;
  ++counters_.fused_blocks;

  auto& busy = busy_[static_cast<std::size_t>(StreamId::Replay)];
  double t = std::max(host_now_, busy);
  const double block_start = t;
  for (const KernelInvocation& inv : block) {
    const double dur = kernel_duration(inv.spec);
    note(t, 0, TraceKind::Kernel, inv.spec.name, dur);
    t += dur;
    ++counters_.kernel_launches;
    if (inv.run) inv.run();
  }
  busy = t;
  note(block_start, 0, TraceKind::FusedBlock, "fused_block", t - block_start);
}

void VirtualDevice::submit_replay(const ExecGraphPtr& graph) {
  check_running();
  if (!graph) raise(Errc::InvalidConfig, "submit_replay: null graph");
  note(host_now_, -1, TraceKind::Dispatch, "replay", cost_.host_dispatch_us);
  host_now_ += cost_.host_dispatch_us;
  ++counters_.dispatches;

  auto& busy = busy_[static_cast<std::size_t>(StreamId::Replay)];
  const double start = std::max(host_now_, busy);
  const double dur = cost_.launch_overhead_us + draw_jitter() +
                     cost_.alpha_us_per_mflop * (static_cast<double>(graph->total_flops()) * 1e-6);
  busy = start + dur;
  ++counters_.graph_replays;
  note(start, 0, TraceKind::Replay, "len=" + std::to_string(graph->length_key()), dur);

  graph->execute();
}

void VirtualDevice::submit_capture(CaptureEngine& engine, int length_key,
                                   std::span<const KernelInvocation> kernels, StreamId target) {
  check_running();
  ExecGraphPtr graph = capture_sequence(engine, length_key, kernels);

  auto& busy = busy_[static_cast<std::size_t>(target)];
  const double start = std::max(host_now_, busy);
  const double dur = cost_.capture_us_per_kernel * static_cast<double>(kernels.size());
  busy = start + dur;
  ++counters_.captures;
  note(start, static_cast<int>(target), TraceKind::Capture,
       "len=" + std::to_string(length_key), dur);

  pending_.push_back({length_key, std::move(graph), busy});
}

std::vector<PendingCapture> VirtualDevice::take_ready_captures() {
  std::vector<PendingCapture> ready;
  auto it = pending_.begin();
  while (it != pending_.end()) {
    if (it->ready_at_us <= host_now_) {
      ready.push_back(std::move(*it));
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
  return ready;
}

EventId VirtualDevice::record_event(StreamId s) {
  check_running();
  const EventId id = ++next_event_;
  events_[id] = busy_[static_cast<std::size_t>(s)];
  ++counters_.events_recorded;
  note(events_[id], static_cast<int>(s), TraceKind::EventRecord, "ev" + std::to_string(id), 0.0);
  return id;
}

void VirtualDevice::wait_event(StreamId waiter, EventId ev) {
  check_running();
  auto it = events_.find(ev);
  if (it == events_.end()) {
    raise(Errc::UnknownEvent, "wait_event: event " + std::to_string(ev) + " was never recorded");
  }
  auto& busy = busy_[static_cast<std::size_t>(waiter)];
  busy = std::max(busy, it->second);
  ++counters_.events_waited;
  note(busy, static_cast<int>(waiter), TraceKind::EventWait, "ev" + std::to_string(ev), 0.0);
}

void VirtualDevice::sync_host_to(StreamId s) {
  check_running();
  host_now_ = std::max(host_now_, busy_[static_cast<std::size_t>(s)]);
  note(host_now_, static_cast<int>(s), TraceKind::SyncHost, "sync", 0.0);
}

void VirtualDevice::sync_all() {
  check_running();
  host_now_ = std::max({host_now_, busy_[0], busy_[1]});
  note(host_now_, -1, TraceKind::SyncAll, "sync_all", 0.0);
}

void VirtualDevice::advance_host(double us) {
  check_running();
  if (us < 0) raise(Errc::InvalidConfig, "advance_host: negative duration");
  host_now_ += us;
}

double VirtualDevice::elapsed() const noexcept {
  return std::max({host_now_, busy_[0], busy_[1]});
}

namespace {
// Shortest round-trippable decimal form, same policy as the CSV writer.
std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}
}  // namespace

void VirtualDevice::export_trace(std::ostream& os) const {
  os << "ts_us,stream,kind,id,duration_us\n";
  for (const TraceRecord& r : trace_) {
    os << fmt(r.ts_us) << ',' << r.stream << ',' << trace_kind_name(r.kind) << ',' << r.label
       << ',' << fmt(r.duration_us) << '\n';
  }
  os << "# dispatches=" << counters_.dispatches << '\n';
  os << "# kernel_launches=" << counters_.kernel_launches << '\n';
  os << "# fused_blocks=" << counters_.fused_blocks << '\n';
  os << "# graph_replays=" << counters_.graph_replays << '\n';
  os << "# captures=" << counters_.captures << '\n';
  os << "# events_recorded=" << counters_.events_recorded << '\n';
  os << "# events_waited=" << counters_.events_waited << '\n';
  os << "# elapsed_us=" << fmt(elapsed()) << '\n';
}

}  // namespace graphrt
