#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "graphrt/graph_cache.hpp"
#include "graphrt/model.hpp"
#include "graphrt/virtual_device.hpp"

namespace graphrt {

// Execution modes. Hybrid is the full system; the others switch off one or
// both of its mechanisms (graph reuse, asynchronous capture, dynamic-op
// fusion) so their contributions can be measured in isolation.
enum class RunMode { Eager, Hybrid, GraphOnly, AblateAsync, AblateFused, AblateBoth };

const char* mode_name(RunMode m) noexcept;
RunMode mode_from_name(const std::string& name);  // InvalidConfig on unknown
inline constexpr RunMode kAllModes[] = {RunMode::Eager,       RunMode::Hybrid,
                                        RunMode::GraphOnly,   RunMode::AblateAsync,
                                        RunMode::AblateFused, RunMode::AblateBoth};

// What a mode does at each decision point.
//   use_cache        look up / replay captured graphs
//   capture_on_miss  capture the plan after an eager fallback pass
//   capture_stream   where capture work runs (Capture = overlapped,
//                    Replay = serialized with compute; matters only when
//                    capture_on_miss is set)
//   fuse_dynamic     submit dynamic preprocessing/sampling ops as one fused
//                    block per group instead of one dispatch per op
struct ModePolicy {
  bool use_cache = false;
  bool capture_on_miss = false;
  StreamId capture_stream = StreamId::Capture;
  bool fuse_dynamic = false;
};
ModePolicy policy_for(RunMode m) noexcept;

// How a static pass was served.
enum class StepPath { Replayed, EagerFallback };

struct StepRequest {
  int step_index = 0;  // 1-based, prefill and decode numbered separately
  int length_key = 0;
};

struct StepResponse {
  int step_index = 0;
  StepPath path = StepPath::EagerFallback;
};

// Single-slot rendezvous between the context side (dynamic state, sampling)
// and the graph side (cache, capture, static passes). Enforces strict
// request/response alternation; any out-of-order use raises SessionClosed.
class Channel {
 public:
  void send_request(const StepRequest& req);
  StepRequest take_request();
  void send_response(const StepResponse& resp);
  StepResponse take_response();

 private:
  enum class State { Idle, Requested, Serving, Responded };
  State state_ = State::Idle;
  StepRequest req_;
  StepResponse resp_;
};

// Owns the dynamic half of a step: embedding extension, slot appends, and
// sampling. Everything it submits is DYNAMIC.
class ContextGenerator {
 public:
  ContextGenerator(Model& model, VirtualDevice& device, SamplerRng& rng, bool fuse_dynamic);

  // extend_position + kv_append for the token entering slot `position`.
  void submit_pre_block(int token, int position);
  // Samples from the model's current logits; syncs the host to the compute
  // stream so the token value is usable, and returns it.
  int submit_sample_block(SampleStrategy strategy);

 private:
  void submit_dynamic(std::vector<KernelInvocation> ops);

  Model* model_;
  VirtualDevice* device_;
  SamplerRng* rng_;
  bool fuse_dynamic_;
  int token_out_ = 0;
};

// Owns the static half: serves pass requests by replaying a cached graph or
// falling back to eager dispatch, optionally scheduling a capture of the
// missed plan. Harvests finished captures into the cache as the host clock
// reaches their completion times.
class GraphGenerator {
 public:
  GraphGenerator(Model& model, GraphCache& cache, CaptureEngine& engine, VirtualDevice& device,
                 ModePolicy policy);

  StepResponse serve(const StepRequest& req, bool allow_cache);
  // Moves every capture the device has finished (by host time) into the
  // cache. Returns how many landed.
  int harvest();

  int captures_completed() const noexcept { return captures_completed_; }

 private:
  Model* model_;
  GraphCache* cache_;
  CaptureEngine* engine_;
  VirtualDevice* device_;
  ModePolicy policy_;
  int captures_completed_ = 0;
};

// Graph cache sizing and warm-up. Warm-up pre-captures plans for lengths
// [warmup_lo, warmup_hi] at session construction, off the device clock (an
// offline build step); an inverted range disables it.
struct CacheConfig {
  std::size_t capacity = 600;
  int warmup_lo = 1;
  int warmup_hi = 50;
  bool prefill_uses_graphs = true;
  EvictionPolicy policy = EvictionPolicy::LeastUsed;
};

// One generation run: prompt is consumed token by token (prefill), then
// gen_len tokens are sampled (decode). Timing state is reset per run; model
// weights and the graph cache persist across runs of the same session.
struct GenerationRequest {
  RunMode mode = RunMode::Hybrid;
  std::vector<int> prompt;
  int gen_len = 1;
  SampleStrategy strategy = SampleStrategy::greedy();
  std::uint64_t sampler_seed = 7;
  std::uint64_t jitter_seed = 99;
  bool record_trace = false;
};

struct GenerationResult {
  std::vector<int> tokens;  // gen_len sampled tokens

  // Host-clock milestones, microseconds from run start (post-warm-up).
  double ttft_us = 0.0;  // first sampled token available on host
  std::vector<double> per_token_us;  // inter-token gaps; [0] is measured
                                     // from device completion of prefill
  double total_us = 0.0;  // everything retired, captures included

  Counters counters;
  CacheStats cache_delta;  // cache activity attributable to this run
  std::vector<StepPath> prefill_paths;  // one per prompt token
  std::vector<StepPath> decode_paths;   // one per decode step
  int captures_completed = 0;           // captures harvested into the cache
  std::size_t cache_released = 0;       // entries dropped at cleanup
  std::string trace_csv;                // set when record_trace
};

// A model plus its persistent graph cache. Construction builds weights,
// allocates the workspace, and performs cache warm-up. Each run() gets a
// fresh virtual device (fresh clock and jitter stream) while cache contents
// carry over, which is what makes steady-state behavior measurable.
class Session {
 public:
  Session(const ModelConfig& model_cfg, const CacheConfig& cache_cfg, const CostModel& cost);

  GenerationResult run(const GenerationRequest& req);

  Model& model() noexcept { return *model_; }
  GraphCache& cache() noexcept { return *cache_; }
  const CacheConfig& cache_config() const noexcept { return cache_cfg_; }
  const CostModel& cost() const noexcept { return cost_; }

 private:
  void validate(const GenerationRequest& req) const;

  CacheConfig cache_cfg_;
  CostModel cost_;
  std::unique_ptr<Model> model_;
  std::unique_ptr<GraphCache> cache_;
  std::unique_ptr<CaptureEngine> engine_;
  SamplerRng sampler_;
};

// One-shot convenience: build a session, run once.
GenerationResult run_inference(const ModelConfig& model_cfg, const CacheConfig& cache_cfg,
                               const CostModel& cost, const GenerationRequest& req);

}  // namespace graphrt
