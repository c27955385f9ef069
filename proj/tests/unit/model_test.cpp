#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "graphrt/model.hpp"
#include "test_util.hpp"

using namespace graphrt;

namespace {

ModelConfig tiny() {
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.vocab_size = 32;
  cfg.max_seq_len = 24;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("config: derived dims and validation") {
  ModelConfig cfg;
  CHECK(cfg.d_ff() == 4 * cfg.d_model);
  CHECK(cfg.head_dim() == cfg.d_model / cfg.n_heads);
  cfg.validate();

  ModelConfig bad = cfg;
  bad.n_heads = 3;  // 64 % 3 != 0
  CHECK_RAISES(Errc::InvalidConfig, bad.validate());
  bad = cfg;
  bad.n_layers = 0;
  CHECK_RAISES(Errc::InvalidConfig, bad.validate());
}

TEST_CASE("init: seeded weights are reproducible and seed-sensitive") {
  ModelConfig cfg = tiny();
  Weights a = init_model(cfg);
  Weights b = init_model(cfg);
  for (std::int64_t i = 0; i < a.embedding.numel(); ++i) CHECK(a.embedding[i] == b.embedding[i]);
  for (std::int64_t i = 0; i < a.head.numel(); ++i) CHECK(a.head[i] == b.head[i]);
  CHECK(a.layers[1].w2[7] == b.layers[1].w2[7]);

  cfg.seed = 6;
  Weights c = init_model(cfg);
  bool any_diff = false;
  for (std::int64_t i = 0; i < a.embedding.numel() && !any_diff; ++i)
    any_diff = a.embedding[i] != c.embedding[i];
  CHECK(any_diff);

  // Every draw is inside the init range.
  for (float v : a.layers[0].wq.data()) {
    CHECK(v >= -0.1f);
    CHECK(v <= 0.1f);
  }
}

TEST_CASE("init: weight shapes") {
  ModelConfig cfg = tiny();
  Weights w = init_model(cfg);
  CHECK(w.embedding.shape() == std::vector<std::int64_t>{32, 16});
  CHECK(w.pos_table.shape() == std::vector<std::int64_t>{24, 16});
  CHECK(w.layers.size() == 2);
  CHECK(w.layers[0].wq.shape() == std::vector<std::int64_t>{16, 16});
  CHECK(w.layers[0].w1.shape() == std::vector<std::int64_t>{16, 64});
  CHECK(w.layers[0].w2.shape() == std::vector<std::int64_t>{64, 16});
  CHECK(w.layers[0].ln1_gamma.shape() == std::vector<std::int64_t>{16});
  CHECK(w.head.shape() == std::vector<std::int64_t>{16, 32});
}

TEST_CASE("plan: fixed kernel count, names, and length-dependent flops only") {
  Model model(tiny());
  const auto& p1 = model.plan(1);
  const auto& p2 = model.plan(2);
  CHECK(static_cast<int>(p1.size()) == Model::kKernelsPerLayer * 2 + 2);
  CHECK(p1.size() == p2.size());

  const char* layer_names[] = {"layernorm", "matmul", "matmul", "matmul", "kv_write_k",
                               "kv_write_v", "attention", "matmul", "residual_add", "layernorm",
                               "matmul", "relu", "matmul", "residual_add"};
  for (int l = 0; l < 2; ++l)
    for (int k = 0; k < Model::kKernelsPerLayer; ++k)
      CHECK(p1[static_cast<std::size_t>(l * Model::kKernelsPerLayer + k)].spec.name ==
            layer_names[k]);
  CHECK(p1[p1.size() - 2].spec.name == "layernorm");
  CHECK(p1[p1.size() - 1].spec.name == "matmul");

  // Only attention kernels change with length, exactly per the formula.
  for (std::size_t i = 0; i < p1.size(); ++i) {
    if (p1[i].spec.name == "attention") {
      const int h = 2, dh = 8;
      CHECK(p1[i].spec.flops == h * 1 * (4 * dh + 5));
      CHECK(p2[i].spec.flops == h * 2 * (4 * dh + 5));
    } else {
      CHECK(p1[i].spec.flops == p2[i].spec.flops);
    }
  }
}

TEST_CASE("plan: memoized per length, stable reference") {
  Model model(tiny());
  const auto* first = &model.plan(3);
  const auto* second = &model.plan(3);
  CHECK(first == second);
  CHECK_RAISES(Errc::LengthOutOfRange, model.plan(0));
  CHECK_RAISES(Errc::LengthOutOfRange, model.plan(25));
}

TEST_CASE("plan: building runs nothing") {
  Model model(tiny());
  (void)model.plan(4);
  CHECK(model.kv().cur_len() == 0);
  for (std::int64_t i = 0; i < model.logits().numel(); ++i) CHECK(model.logits()[i] == 0.0f);
}

TEST_CASE("prefill: advances the cache one slot per token") {
  Model model(tiny());
  model.prefill_math({1, 2, 3, 4, 5});
  CHECK(model.kv().cur_len() == 5);
  model.reset();
  CHECK(model.kv().cur_len() == 0);
}

TEST_CASE("prefill consistency: one decode step equals prefilling the extended prompt") {
  ModelConfig cfg = tiny();
  const std::vector<int> prompt{3, 1, 4, 1, 5};

  Model a(cfg);
  a.prefill_math(prompt);
  SamplerRng rng(0);
  const int t1 = sample_token(a.logits(), SampleStrategy::greedy(), rng);
  a.step_math(t1);

  std::vector<int> extended = prompt;
  extended.push_back(t1);
  Model b(cfg);
  b.prefill_math(extended);

  CHECK(a.kv().cur_len() == b.kv().cur_len());
  for (std::int64_t i = 0; i < a.logits().numel(); ++i) CHECK(a.logits()[i] == b.logits()[i]);
}

TEST_CASE("prefill: rejects empty and oversized prompts") {
  Model model(tiny());
  CHECK_RAISES(Errc::EmptyPrompt, model.prefill_math({}));
  std::vector<int> too_long(25, 1);
  CHECK_RAISES(Errc::PromptTooLong, model.prefill_math(too_long));
}

TEST_CASE("model: determinism across instances") {
  Model a(tiny()), b(tiny());
  for (int t : {7, 8, 9}) {
    a.step_math(t);
    b.step_math(t);
  }
  for (std::int64_t i = 0; i < a.logits().numel(); ++i) CHECK(a.logits()[i] == b.logits()[i]);
}

TEST_CASE("model: workspace and weight-id bookkeeping") {
  ModelConfig cfg = tiny();
  Model model(cfg);
  // 11 activation buffers plus adopted K/V tensors for each layer.
  CHECK(model.workspace().buffer_count() == 11 + 2 * static_cast<std::size_t>(cfg.n_layers));
  // embedding + pos + 10 per layer + lnf gamma/beta + head.
  CHECK(model.weight_ids().size() == 2 + 10 * static_cast<std::size_t>(cfg.n_layers) + 3);
  for (int l = 0; l < cfg.n_layers; ++l) {
    CHECK(model.workspace().contains(model.kv().key(l).buffer_id()));
    CHECK(model.workspace().contains(model.kv().value(l).buffer_id()));
  }
  CHECK(model.weight_ids().count(model.weights().embedding.buffer_id()) == 1);
  CHECK(!model.workspace().contains(model.weights().embedding.buffer_id()));
}

TEST_CASE("model: dynamic op builders bind the model buffers") {
  Model model(tiny());
  auto ext = model.make_extend_position_op(3, 0);
  CHECK(ext.spec.op_class == OpClass::Dynamic);
  CHECK(ext.spec.output_buffers[0] == model.x().buffer_id());

  auto app = model.make_slot_append_op();
  CHECK(app.spec.op_class == OpClass::Dynamic);

  // The slot append introduces a zeroed row: run the pair and look.
  ext.run();
  app.run();
  CHECK(model.kv().cur_len() == 1);
  for (int i = 0; i < 16; ++i) CHECK(model.kv().key(0)[i] == 0.0f);

  SamplerRng rng(1);
  int tok = -1;
  auto samp = model.make_sample_op(SampleStrategy::greedy(), &rng, &tok);
  CHECK(samp.spec.op_class == OpClass::Dynamic);
  samp.run();
  CHECK(tok == 0);  // logits untouched, all zero, lowest index wins
}
