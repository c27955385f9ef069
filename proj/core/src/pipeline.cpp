#include "graphrt/pipeline.hpp"

#include <sstream>
#include <utility>

#include "graphrt/error.hpp"

namespace graphrt {

const char* mode_name(RunMode m) noexcept {
  switch (m) {
    case RunMode::Eager: return "eager";
    case RunMode::Hybrid: return "hybrid";
    case RunMode::GraphOnly: return "graph_only";
    case RunMode::AblateAsync: return "ablate_async";
    case RunMode::AblateFused: return "ablate_fused";
    case RunMode::AblateBoth: return "ablate_both";
  }
  return "?";
}

RunMode mode_from_name(const std::string& name) {
  for (RunMode m : kAllModes) {
    if (name == mode_name(m)) return m;
  }
  raise(Errc::InvalidConfig, "unknown mode '" + name + "'");
}

ModePolicy policy_for(RunMode m) noexcept {
  switch (m) {
    case RunMode::Eager:
      return {.use_cache = false, .capture_on_miss = false,
              .capture_stream = StreamId::Capture, .fuse_dynamic = false};
    case RunMode::Hybrid:
      return {.use_cache = true, .capture_on_miss = true,
              .capture_stream = StreamId::Capture, .fuse_dynamic = true};
    case RunMode::GraphOnly:
      return {.use_cache = true, .capture_on_miss = false,
              .capture_stream = StreamId::Capture, .fuse_dynamic = true};
    case RunMode::AblateAsync:
      return {.use_cache = true, .capture_on_miss = true,
              .capture_stream = StreamId::Replay, .fuse_dynamic = true};
    case RunMode::AblateFused:
      return {.use_cache = true, .capture_on_miss = true,
              .capture_stream = StreamId::Capture, .fuse_dynamic = false};
    case RunMode::AblateBoth:
      return {.use_cache = true, .capture_on_miss = true,
              .capture_stream = StreamId::Replay, .fuse_dynamic = false};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Channel

void Channel::send_request(const StepRequest& req) {
  if (state_ != State::Idle) raise(Errc::SessionClosed, "channel: request out of turn");
  req_ = req;
  state_ = State::Requested;
}

StepRequest Channel::take_request() {
  if (state_ != State::Requested) raise(Errc::SessionClosed, "channel: no request pending");
  state_ = State::Serving;
  return req_;
}

void Channel::send_response(const StepResponse& resp) {
  if (state_ != State::Serving) raise(Errc::SessionClosed, "channel: response out of turn");
  resp_ = resp;
  state_ = State::Responded;
}

StepResponse Channel::take_response() {
  if (state_ != State::Responded) raise(Errc::SessionClosed, "channel: no response pending");
  state_ = State::Idle;
  return resp_;
}

// ---------------------------------------------------------------------------
// ContextGenerator

ContextGenerator::ContextGenerator(Model& model, VirtualDevice& device, SamplerRng& rng,
                                   bool fuse_dynamic)
    : model_(&model), device_(&device), rng_(&rng), fuse_dynamic_(fuse_dynamic) {}

void ContextGenerator::submit_dynamic(std::vector<KernelInvocation> ops) {
  if (fuse_dynamic_) {
    device_->submit_fused_block(ops);
  } else {
    for (const KernelInvocation& op : ops) device_->submit_kernel(op);
  }
}

void ContextGenerator::submit_pre_block(int token, int position) {
  std::vector<KernelInvocation> ops;
  ops.push_back(model_->make_extend_position_op(token, position));
  ops.push_back(model_->make_slot_append_op());
  submit_dynamic(std::move(ops));
}

int ContextGenerator::submit_sample_block(SampleStrategy strategy) {
  std::vector<KernelInvocation> ops;
  ops.push_back(model_->make_sample_op(strategy, rng_, &token_out_));
  submit_dynamic(std::move(ops));
  // The token value gates everything after it, so the host blocks here.
  device_->sync_host_to(StreamId::Replay);
  return token_out_;
}

// ---------------------------------------------------------------------------
// GraphGenerator

GraphGenerator::GraphGenerator(Model& model, GraphCache& cache, CaptureEngine& engine,
                               VirtualDevice& device, ModePolicy policy)
    : model_(&model), cache_(&cache), engine_(&engine), device_(&device), policy_(policy) {}

int GraphGenerator::harvest() {
  int landed = 0;
  for (PendingCapture& pc : device_->take_ready_captures()) {
    cache_->insert(pc.length_key, std::move(pc.graph));
    ++landed;
  }
  captures_completed_ += landed;
  return landed;
}

StepResponse GraphGenerator::serve(const StepRequest& req, bool allow_cache) {
  harvest();

  const int key = req.length_key;
  const bool use_cache = policy_.use_cache && allow_cache;
  if (use_cache) {
    if (auto hit = cache_->lookup(key)) {
      validate_replay(**hit, model_->kv());
      device_->submit_replay(*hit);
      return {req.step_index, StepPath::Replayed};
    }
  }

  const auto& plan = model_->plan(key);
  for (const KernelInvocation& inv : plan) device_->submit_kernel(inv);

  if (use_cache && policy_.capture_on_miss) {
    // The capture records the very buffers the pass just used, so it may not
    // start until the pass has retired on the compute stream.
    EventId done = device_->record_event(StreamId::Replay);
    device_->wait_event(policy_.capture_stream, done);
    device_->submit_capture(*engine_, key, plan, policy_.capture_stream);
  }
  return {req.step_index, StepPath::EagerFallback};
}

// ---------------------------------------------------------------------------
// Session

Session::Session(const ModelConfig& model_cfg, const CacheConfig& cache_cfg,
                 const CostModel& cost)
    : cache_cfg_(cache_cfg), cost_(cost) {
  model_ = std::make_unique<Model>(model_cfg);
  cache_ = std::make_unique<GraphCache>(cache_cfg.capacity, cache_cfg.policy);
  engine_ = std::make_unique<CaptureEngine>(model_->workspace(), model_->weight_ids());

  // Warm-up is an offline build step: graphs are constructed directly, with
  // no device submissions and no virtual time, before any run starts.
  cache_->precapture_warmup(cache_cfg.warmup_lo, cache_cfg.warmup_hi, [this](int key) {
    const auto& plan = model_->plan(key);
    return capture_sequence(*engine_, key, {plan.data(), plan.size()});
  });
}

void Session::validate(const GenerationRequest& req) const {
  if (req.prompt.empty()) raise(Errc::EmptyPrompt, "run: prompt is empty");
  if (req.gen_len < 1) raise(Errc::InvalidConfig, "run: gen_len must be >= 1");
  const int total = static_cast<int>(req.prompt.size()) + req.gen_len;
  if (total > model_->config().max_seq_len) {
    raise(Errc::PromptTooLong,
          "run: prompt + gen_len = " + std::to_string(total) + " exceeds max_seq_len " +
              std::to_string(model_->config().max_seq_len));
  }
}

GenerationResult Session::run(const GenerationRequest& req) {
  validate(req);
  const ModePolicy policy = policy_for(req.mode);
  const int p = static_cast<int>(req.prompt.size());
  const int n = req.gen_len;

  model_->reset();
  sampler_.reset(req.sampler_seed);
  VirtualDevice device(cost_, req.jitter_seed);
  device.set_trace(req.record_trace);

  const CacheStats stats_before = cache_->stats();
  cache_->begin_session();

  Channel channel;
  ContextGenerator ctx(*model_, device, sampler_, policy.fuse_dynamic);
  GraphGenerator gen(*model_, *cache_, *engine_, device, policy);

  GenerationResult result;
  result.prefill_paths.reserve(static_cast<std::size_t>(p));
  result.decode_paths.reserve(static_cast<std::size_t>(n));
  result.tokens.reserve(static_cast<std::size_t>(n));
  result.per_token_us.reserve(static_cast<std::size_t>(n));

  // Prefill: one static pass per prompt token, keys 1..p. No sampling and no
  // host sync inside the loop; the host just keeps feeding the device.
  for (int j = 1; j <= p; ++j) {
    ctx.submit_pre_block(req.prompt[static_cast<std::size_t>(j - 1)], j - 1);
    channel.send_request({j, j});
    channel.send_response(gen.serve(channel.take_request(), cache_cfg_.prefill_uses_graphs));
    result.prefill_paths.push_back(channel.take_response().path);
  }
  const double prefill_end = device.busy(StreamId::Replay);

  // Decode: step i samples token i from the logits carried out of the
  // previous pass, then runs the pass at key p+i to produce the next logits.
  // The final pass's logits are never consumed; running it keeps every step
  // identical, which is exactly what makes the step sequence capturable.
  double prev_ts = prefill_end;
  for (int i = 1; i <= n; ++i) {
    const int token = ctx.submit_sample_block(req.strategy);
    const double ts = device.host_now();
    if (i == 1) result.ttft_us = ts;
    result.per_token_us.push_back(ts - prev_ts);
    prev_ts = ts;
    result.tokens.push_back(token);

    ctx.submit_pre_block(token, p + i - 1);
    channel.send_request({i, p + i});
    channel.send_response(gen.serve(channel.take_request(), true));
    result.decode_paths.push_back(channel.take_response().path);
  }

  // Cleanup: drain both streams, land whatever captures finished, and drop
  // cache entries this session never touched.
  device.sync_all();
  gen.harvest();
  result.cache_released = cache_->release_inactive();
  result.captures_completed = gen.captures_completed();
  result.total_us = device.elapsed();
  result.counters = device.counters();

  const CacheStats stats_after = cache_->stats();
  result.cache_delta.hits = stats_after.hits - stats_before.hits;
  result.cache_delta.misses = stats_after.misses - stats_before.misses;
  result.cache_delta.inserts = stats_after.inserts - stats_before.inserts;
  result.cache_delta.evictions = stats_after.evictions - stats_before.evictions;
  result.cache_delta.releases = stats_after.releases - stats_before.releases;

  if (req.record_trace) {
    std::ostringstream oss;
    device.export_trace(oss);
    result.trace_csv = oss.str();
  }
  device.stop();
  return result;
}

GenerationResult run_inference(const ModelConfig& model_cfg, const CacheConfig& cache_cfg,
                               const CostModel& cost, const GenerationRequest& req) {
  Session session(model_cfg, cache_cfg, cost);
  return session.run(req);
}

}  // namespace graphrt
