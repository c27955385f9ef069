#include "graphrt/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "graphrt/error.hpp"
#include "graphrt/prng.hpp"

namespace graphrt {

void ModelConfig::validate() const {
  if (n_layers < 1) raise(Errc::InvalidConfig, "n_layers must be >= 1");
  if (d_model < 1) raise(Errc::InvalidConfig, "d_model must be >= 1");
  if (n_heads < 1) raise(Errc::InvalidConfig, "n_heads must be >= 1");
  if (d_model % n_heads != 0) raise(Errc::InvalidConfig, "d_model must be divisible by n_heads");
  if (vocab_size < 1) raise(Errc::InvalidConfig, "vocab_size must be >= 1");
  if (max_seq_len < 1) raise(Errc::InvalidConfig, "max_seq_len must be >= 1");
  if (!(ln_eps > 0.0f)) raise(Errc::InvalidConfig, "ln_eps must be positive");
}

namespace {

void fill_uniform(Tensor& t, std::mt19937_64& eng) {
  for (float& v : t.data()) v = uniform_symmetric(eng, 0.1f);
}

}  // namespace

Weights init_model(const ModelConfig& cfg) {
  cfg.validate();
  const std::int64_t d = cfg.d_model;
  const std::int64_t ff = cfg.d_ff();
  std::mt19937_64 eng(cfg.seed);

  Weights w{
      .embedding = Tensor({cfg.vocab_size, d}),
      .pos_table = Tensor({cfg.max_seq_len, d}),
      .layers = {},
      .lnf_gamma = Tensor({d}),
      .lnf_beta = Tensor({d}),
      .head = Tensor({d, cfg.vocab_size}),
  };
  fill_uniform(w.embedding, eng);
  fill_uniform(w.pos_table, eng);
  w.layers.reserve(static_cast<std::size_t>(cfg.n_layers));
  for (int l = 0; l < cfg.n_layers; ++l) {
    LayerWeights lw{
        .ln1_gamma = Tensor({d}),
        .ln1_beta = Tensor({d}),
        .wq = Tensor({d, d}),
        .wk = Tensor({d, d}),
        .wv = Tensor({d, d}),
        .wo = Tensor({d, d}),
        .ln2_gamma = Tensor({d}),
        .ln2_beta = Tensor({d}),
        .w1 = Tensor({d, ff}),
        .w2 = Tensor({ff, d}),
    };
    fill_uniform(lw.wq, eng);
    fill_uniform(lw.wk, eng);
    fill_uniform(lw.wv, eng);
    fill_uniform(lw.wo, eng);
    fill_uniform(lw.w1, eng);
    fill_uniform(lw.w2, eng);
    fill_uniform(lw.ln1_gamma, eng);
    fill_uniform(lw.ln1_beta, eng);
    fill_uniform(lw.ln2_gamma, eng);
    fill_uniform(lw.ln2_beta, eng);
    w.layers.push_back(std::move(lw));
  }
  fill_uniform(w.lnf_gamma, eng);
  fill_uniform(w.lnf_beta, eng);
  fill_uniform(w.head, eng);
  return w;
}

Model::Model(ModelConfig cfg)
    : cfg_(cfg),
      weights_(init_model(cfg)),
      kv_(cfg.n_layers, cfg.max_seq_len, cfg.n_heads, cfg.head_dim()) {
  const std::int64_t d = cfg_.d_model;
  x_ = &ws_.alloc({1, d});
  ln_out_ = &ws_.alloc({1, d});
  q_ = &ws_.alloc({1, d});
  k_ = &ws_.alloc({1, d});
  v_ = &ws_.alloc({1, d});
  attn_out_ = &ws_.alloc({1, d});
  o_ = &ws_.alloc({1, d});
  mlp_ = &ws_.alloc({1, cfg_.d_ff()});
  logits_ = &ws_.alloc({1, cfg_.vocab_size});
  zero_k_ = &ws_.alloc({cfg_.n_layers, cfg_.n_heads, cfg_.head_dim()});
  zero_v_ = &ws_.alloc({cfg_.n_layers, cfg_.n_heads, cfg_.head_dim()});
  for (int l = 0; l < cfg_.n_layers; ++l) {
    ws_.adopt(kv_.key(l));
    ws_.adopt(kv_.value(l));
  }

  weight_ids_.insert(weights_.embedding.buffer_id());
  weight_ids_.insert(weights_.pos_table.buffer_id());
  for (const LayerWeights& lw : weights_.layers) {
    weight_ids_.insert(lw.ln1_gamma.buffer_id());
    weight_ids_.insert(lw.ln1_beta.buffer_id());
    weight_ids_.insert(lw.wq.buffer_id());
    weight_ids_.insert(lw.wk.buffer_id());
    weight_ids_.insert(lw.wv.buffer_id());
    weight_ids_.insert(lw.wo.buffer_id());
    weight_ids_.insert(lw.ln2_gamma.buffer_id());
    weight_ids_.insert(lw.ln2_beta.buffer_id());
    weight_ids_.insert(lw.w1.buffer_id());
    weight_ids_.insert(lw.w2.buffer_id());
  }
  weight_ids_.insert(weights_.lnf_gamma.buffer_id());
  weight_ids_.insert(weights_.lnf_beta.buffer_id());
  weight_ids_.insert(weights_.head.buffer_id());
}

std::vector<KernelInvocation> Model::build_plan(int length) {
  const float scale = 1.0f / std::sqrt(static_cast<float>(cfg_.head_dim()));
  const int row = length - 1;  // slot holding the current token
  std::vector<KernelInvocation> plan;
  plan.reserve(static_cast<std::size_t>(plan_kernel_count(cfg_.n_layers)));
  for (int l = 0; l < cfg_.n_layers; ++l) {
    LayerWeights& lw = weights_.layers[static_cast<std::size_t>(l)];
    plan.push_back(make_layernorm(*x_, lw.ln1_gamma, lw.ln1_beta, cfg_.ln_eps, *ln_out_));
    plan.push_back(make_matmul(*ln_out_, lw.wq, *q_));
    plan.push_back(make_matmul(*ln_out_, lw.wk, *k_));
    plan.push_back(make_matmul(*ln_out_, lw.wv, *v_));
    plan.push_back(make_kv_write(kv_, l, KvSlot::Key, row, *k_));
    plan.push_back(make_kv_write(kv_, l, KvSlot::Value, row, *v_));
    plan.push_back(make_attention(*q_, kv_, l, length, scale, *attn_out_));
    plan.push_back(make_matmul(*attn_out_, lw.wo, *o_));
    plan.push_back(make_residual_add(*x_, *o_));
    plan.push_back(make_layernorm(*x_, lw.ln2_gamma, lw.ln2_beta, cfg_.ln_eps, *ln_out_));
    plan.push_back(make_matmul(*ln_out_, lw.w1, *mlp_));
    plan.push_back(make_relu(*mlp_));
    plan.push_back(make_matmul(*mlp_, lw.w2, *o_));
    plan.push_back(make_residual_add(*x_, *o_));
  }
  plan.push_back(make_layernorm(*x_, weights_.lnf_gamma, weights_.lnf_beta, cfg_.ln_eps, *ln_out_));
  plan.push_back(make_matmul(*ln_out_, weights_.head, *logits_));
  return plan;
}

const std::vector<KernelInvocation>& Model::plan(int length) {
  if (length < 1 || length > cfg_.max_seq_len) {
    raise(Errc::LengthOutOfRange,
          "plan length " + std::to_string(length) + " outside [1, " +
              std::to_string(cfg_.max_seq_len) + "]");
  }
  auto it = plans_.find(length);
  if (it == plans_.end()) it = plans_.emplace(length, build_plan(length)).first;
  return it->second;
}

KernelInvocation Model::make_extend_position_op(int token, int position) {
  return make_extend_position(token, position, weights_.embedding, weights_.pos_table, *x_);
}

KernelInvocation Model::make_slot_append_op() {
  return make_kv_append(kv_, *zero_k_, *zero_v_);
}

KernelInvocation Model::make_sample_op(SampleStrategy strategy, SamplerRng* rng, int* out_token) {
  return make_sample_token(*logits_, strategy, rng, out_token);
}

void Model::step_math(int token) {
  const int position = kv_.cur_len();
  make_extend_position_op(token, position).run();
  make_slot_append_op().run();
  const auto& p = plan(kv_.cur_len());
  for (const KernelInvocation& inv : p) inv.run();
}

void Model::prefill_math(const std::vector<int>& prompt) {
  if (prompt.empty()) raise(Errc::EmptyPrompt, "prefill: prompt is empty");
  if (static_cast<int>(prompt.size()) > cfg_.max_seq_len) {
    raise(Errc::PromptTooLong, "prefill: prompt length " + std::to_string(prompt.size()) +
                                   " exceeds max_seq_len " + std::to_string(cfg_.max_seq_len));
  }
  for (int t : prompt) step_math(t);
}

}  // namespace graphrt
