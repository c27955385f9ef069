#include "graphrt/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "graphrt/prng.hpp"

namespace graphrt {

namespace {

BufferBinding bind(const Tensor& t) { return {t.buffer_id(), t.shape(), &t}; }

void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) raise(code, msg);
}

bool is_2d(const Tensor& t) { return t.shape().size() == 2; }

}  // namespace

KernelInvocation make_matmul(const Tensor& a, const Tensor& b, Tensor& out) {
  require(is_2d(a) && is_2d(b) && is_2d(out), Errc::ShapeMismatch, "matmul operands must be 2-D");
  const std::int64_t m = a.shape()[0], k = a.shape()[1];
  const std::int64_t k2 = b.shape()[0], n = b.shape()[1];
  require(k == k2, Errc::ShapeMismatch,
          "matmul inner dims disagree: " + shape_to_string(a.shape()) + " x " + shape_to_string(b.shape()));
  require(out.shape()[0] == m && out.shape()[1] == n, Errc::ShapeMismatch,
          "matmul output must be [" + std::to_string(m) + "," + std::to_string(n) + "]");

  KernelInvocation inv;
  inv.spec = {"matmul", OpClass::Static, {a.buffer_id(), b.buffer_id()}, {out.buffer_id()}, 2 * m * k * n};
  inv.bindings = {bind(a), bind(b), bind(out)};
  const float* pa = a.raw();
  const float* pb = b.raw();
  float* po = out.raw();
  inv.run = [pa, pb, po, m, k, n]() {
    for (std::int64_t i = 0; i < m; ++i) {
      float* orow = po + i * n;
      std::fill(orow, orow + n, 0.0f);
      for (std::int64_t p = 0; p < k; ++p) {
        const float av = pa[i * k + p];
        const float* brow = pb + p * n;
        for (std::int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  };
  return inv;
}

KernelInvocation make_layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                                float eps, Tensor& out) {
  require(is_2d(x) && is_2d(out), Errc::ShapeMismatch, "layernorm operands must be 2-D");
  const std::int64_t n = x.shape()[0], d = x.shape()[1];
  require(out.shape()[0] == n && out.shape()[1] == d, Errc::ShapeMismatch, "layernorm output shape mismatch");
  require(gamma.numel() == d && beta.numel() == d, Errc::ShapeMismatch, "layernorm gamma/beta must have d elements");

  KernelInvocation inv;
  inv.spec = {"layernorm", OpClass::Static,
              {x.buffer_id(), gamma.buffer_id(), beta.buffer_id()}, {out.buffer_id()}, 5 * n * d};
  inv.bindings = {bind(x), bind(gamma), bind(beta), bind(out)};
  const float* px = x.raw();
  const float* pg = gamma.raw();
  const float* pb = beta.raw();
  float* po = out.raw();
  inv.run = [px, pg, pb, po, n, d, eps]() {
    for (std::int64_t i = 0; i < n; ++i) {
      const float* row = px + i * d;
      float mean = 0.0f;
      for (std::int64_t j = 0; j < d; ++j) mean += row[j];
      mean /= static_cast<float>(d);
      float var = 0.0f;  // population variance
      for (std::int64_t j = 0; j < d; ++j) {
        const float c = row[j] - mean;
        var += c * c;
      }
      var /= static_cast<float>(d);
      const float inv_std = 1.0f / std::sqrt(var + eps);
      float* orow = po + i * d;
      for (std::int64_t j = 0; j < d; ++j) orow[j] = (row[j] - mean) * inv_std * pg[j] + pb[j];
    }
  };
  return inv;
}

KernelInvocation make_attention(const Tensor& q, const KvCache& kv, int layer, int length,
                                float scale, Tensor& out) {
  require(length >= 1, Errc::EmptyCache, "attention over zero cached positions");
  require(length <= kv.max_seq(), Errc::ShapeMismatch, "attention length exceeds max_seq");
  require(layer >= 0 && layer < kv.n_layers(), Errc::ShapeMismatch, "attention layer out of range");
  const std::int64_t h = kv.n_heads(), dh = kv.head_dim();
  require(q.numel() == h * dh, Errc::ShapeMismatch, "attention query must hold n_heads*head_dim floats");
  require(out.numel() == h * dh, Errc::ShapeMismatch, "attention output must hold n_heads*head_dim floats");

  const Tensor& K = kv.key(layer);
  const Tensor& V = kv.value(layer);
  KernelInvocation inv;
  inv.spec = {"attention", OpClass::Static,
              {q.buffer_id(), K.buffer_id(), V.buffer_id()}, {out.buffer_id()},
              h * static_cast<std::int64_t>(length) * (4 * dh + 5)};
  inv.bindings = {bind(q), bind(K), bind(V), bind(out)};
  const float* pq = q.raw();
  const float* pk = K.raw();
  const float* pv = V.raw();
  float* po = out.raw();
  const std::int64_t L = length;
  inv.run = [pq, pk, pv, po, h, dh, L, scale]() {
    std::vector<float> probs(static_cast<std::size_t>(L));
    for (std::int64_t head = 0; head < h; ++head) {
      const float* qh = pq + head * dh;
      float max_s = -std::numeric_limits<float>::infinity();
      for (std::int64_t j = 0; j < L; ++j) {
        const float* krow = pk + (j * h + head) * dh;
        float s = 0.0f;
        for (std::int64_t d = 0; d < dh; ++d) s += qh[d] * krow[d];
        s *= scale;
        probs[static_cast<std::size_t>(j)] = s;
        max_s = std::max(max_s, s);
      }
      float denom = 0.0f;
      for (std::int64_t j = 0; j < L; ++j) {
        const float e = std::exp(probs[static_cast<std::size_t>(j)] - max_s);
        probs[static_cast<std::size_t>(j)] = e;
        denom += e;
      }
      float* oh = po + head * dh;
      std::fill(oh, oh + dh, 0.0f);
      for (std::int64_t j = 0; j < L; ++j) {
        const float p = probs[static_cast<std::size_t>(j)] / denom;
        const float* vrow = pv + (j * h + head) * dh;
        for (std::int64_t d = 0; d < dh; ++d) oh[d] += p * vrow[d];
      }
    }
  };
  return inv;
}

KernelInvocation make_embedding_lookup(std::vector<int> ids, const Tensor& table, Tensor& out) {
  require(is_2d(table), Errc::ShapeMismatch, "embedding table must be 2-D");
  const std::int64_t vocab = table.shape()[0], d = table.shape()[1];
  const std::int64_t rows = static_cast<std::int64_t>(ids.size());
  require(rows >= 1, Errc::ShapeMismatch, "embedding_lookup needs at least one id");
  for (int id : ids)
    require(id >= 0 && id < vocab, Errc::TokenOutOfRange, "token id " + std::to_string(id));
  require(out.numel() == rows * d, Errc::ShapeMismatch, "embedding output must be [rows, d]");

  KernelInvocation inv;
  inv.spec = {"embedding_lookup", OpClass::Static, {table.buffer_id()}, {out.buffer_id()}, rows * d};
  inv.bindings = {bind(table), bind(out)};
  const float* pt = table.raw();
  float* po = out.raw();
  inv.run = [ids = std::move(ids), pt, po, d]() {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const float* row = pt + static_cast<std::int64_t>(ids[i]) * d;
      std::copy(row, row + d, po + static_cast<std::int64_t>(i) * d);
    }
  };
  return inv;
}

KernelInvocation make_residual_add(Tensor& x, const Tensor& y) {
  require(x.numel() == y.numel(), Errc::ShapeMismatch, "residual_add operand sizes differ");
  KernelInvocation inv;
  inv.spec = {"residual_add", OpClass::Static, {x.buffer_id(), y.buffer_id()}, {x.buffer_id()}, x.numel()};
  inv.bindings = {bind(x), bind(y)};
  float* px = x.raw();
  const float* py = y.raw();
  const std::int64_t n = x.numel();
  inv.run = [px, py, n]() {
    for (std::int64_t i = 0; i < n; ++i) px[i] += py[i];
  };
  return inv;
}

KernelInvocation make_relu(Tensor& x) {
  KernelInvocation inv;
  inv.spec = {"relu", OpClass::Static, {x.buffer_id()}, {x.buffer_id()}, x.numel()};
  inv.bindings = {bind(x)};
  float* px = x.raw();
  const std::int64_t n = x.numel();
  inv.run = [px, n]() {
    for (std::int64_t i = 0; i < n; ++i) px[i] = std::max(px[i], 0.0f);
  };
  return inv;
}

KernelInvocation make_kv_write(KvCache& kv, int layer, KvSlot slot, int row, const Tensor& src) {
  require(layer >= 0 && layer < kv.n_layers(), Errc::ShapeMismatch, "kv_write layer out of range");
  require(row >= 0 && row < kv.max_seq(), Errc::ShapeMismatch, "kv_write row out of range");
  const std::int64_t stride = static_cast<std::int64_t>(kv.n_heads()) * kv.head_dim();
  require(src.numel() == stride, Errc::ShapeMismatch, "kv_write source must hold n_heads*head_dim floats");

  Tensor& dst = slot == KvSlot::Key ? kv.key(layer) : kv.value(layer);
  KernelInvocation inv;
  inv.spec = {slot == KvSlot::Key ? "kv_write_k" : "kv_write_v", OpClass::Static,
              {src.buffer_id()}, {dst.buffer_id()}, stride};
  inv.bindings = {bind(src), bind(dst)};
  const float* ps = src.raw();
  float* pd = dst.raw() + static_cast<std::int64_t>(row) * stride;
  inv.run = [ps, pd, stride]() { std::copy(ps, ps + stride, pd); };
  return inv;
}

KernelInvocation make_kv_append(KvCache& kv, const Tensor& k_new, const Tensor& v_new) {
  const std::int64_t stride = static_cast<std::int64_t>(kv.n_heads()) * kv.head_dim();
  const std::int64_t total = static_cast<std::int64_t>(kv.n_layers()) * stride;
  require(k_new.numel() == total && v_new.numel() == total, Errc::ShapeMismatch,
          "kv_append inputs must hold n_layers*n_heads*head_dim floats");

  KernelInvocation inv;
  std::vector<BufferId> outs;
  inv.bindings = {bind(k_new), bind(v_new)};
  for (int l = 0; l < kv.n_layers(); ++l) {
    outs.push_back(kv.key(l).buffer_id());
    outs.push_back(kv.value(l).buffer_id());
    inv.bindings.push_back(bind(kv.key(l)));
    inv.bindings.push_back(bind(kv.value(l)));
  }
  inv.spec = {"kv_append", OpClass::Dynamic, {k_new.buffer_id(), v_new.buffer_id()},
              std::move(outs), 2 * total};
  KvCache* pkv = &kv;
  const float* pk = k_new.raw();
  const float* pv = v_new.raw();
  inv.run = [pkv, pk, pv, stride]() {
    const int row = pkv->cur_len();
    pkv->advance_len();  // raises CacheFull at max_seq before any write
    for (int l = 0; l < pkv->n_layers(); ++l) {
      std::copy(pk + l * stride, pk + (l + 1) * stride,
                pkv->key(l).raw() + static_cast<std::int64_t>(row) * stride);
      std::copy(pv + l * stride, pv + (l + 1) * stride,
                pkv->value(l).raw() + static_cast<std::int64_t>(row) * stride);
    }
  };
  return inv;
}

KernelInvocation make_extend_position(int token, int position, const Tensor& emb,
                                      const Tensor& pos_table, Tensor& out) {
  require(is_2d(emb) && is_2d(pos_table), Errc::ShapeMismatch, "embedding tables must be 2-D");
  const std::int64_t vocab = emb.shape()[0], d = emb.shape()[1];
  require(pos_table.shape()[1] == d, Errc::ShapeMismatch, "position table width mismatch");
  require(token >= 0 && token < vocab, Errc::TokenOutOfRange, "token id " + std::to_string(token));
  require(position >= 0 && position < pos_table.shape()[0], Errc::ShapeMismatch,
          "position " + std::to_string(position) + " outside position table");
  require(out.numel() == d, Errc::ShapeMismatch, "extend_position output must hold d floats");

  KernelInvocation inv;
  inv.spec = {"extend_position", OpClass::Dynamic,
              {emb.buffer_id(), pos_table.buffer_id()}, {out.buffer_id()}, 2 * d};
  inv.bindings = {bind(emb), bind(pos_table), bind(out)};
  const float* pe = emb.raw() + static_cast<std::int64_t>(token) * d;
  const float* pp = pos_table.raw() + static_cast<std::int64_t>(position) * d;
  float* po = out.raw();
  inv.run = [pe, pp, po, d]() {
    for (std::int64_t j = 0; j < d; ++j) po[j] = pe[j] + pp[j];
  };
  return inv;
}

namespace {

int run_sampler(const float* logits, std::int64_t vocab, const SampleStrategy& strategy,
                SamplerRng* rng) {
  if (strategy.kind == SampleStrategy::Kind::Greedy) {
    std::int64_t best = 0;
    for (std::int64_t i = 1; i < vocab; ++i)
      if (logits[i] > logits[best]) best = i;  // strict >: ties keep the lowest index
    return static_cast<int>(best);
  }
  // Temperature sampling: stable softmax, then inverse-CDF walk on one draw.
  const float t = static_cast<float>(strategy.temperature);
  float max_l = logits[0];
  for (std::int64_t i = 1; i < vocab; ++i) max_l = std::max(max_l, logits[i]);
  std::vector<float> probs(static_cast<std::size_t>(vocab));
  float denom = 0.0f;
  for (std::int64_t i = 0; i < vocab; ++i) {
    const float e = std::exp((logits[i] - max_l) / t);
    probs[static_cast<std::size_t>(i)] = e;
    denom += e;
  }
  const double u = uniform01(rng->engine()) * denom;
  double acc = 0.0;
  for (std::int64_t i = 0; i < vocab; ++i) {
    acc += probs[static_cast<std::size_t>(i)];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(vocab - 1);
}

}  // namespace

KernelInvocation make_sample_token(const Tensor& logits, SampleStrategy strategy,
                                   SamplerRng* rng, int* out_token) {
  require(logits.numel() >= 1, Errc::ShapeMismatch, "sample_token needs non-empty logits");
  require(strategy.kind == SampleStrategy::Kind::Greedy || rng != nullptr, Errc::InvalidConfig,
          "temperature sampling needs an RNG");
  KernelInvocation inv;
  const std::int64_t vocab = logits.numel();
  inv.spec = {"sample_token", OpClass::Dynamic, {logits.buffer_id()}, {},
              strategy.kind == SampleStrategy::Kind::Greedy ? vocab : 4 * vocab};
  inv.bindings = {bind(logits)};
  const float* pl = logits.raw();
  inv.run = [pl, vocab, strategy, rng, out_token]() {
    *out_token = run_sampler(pl, vocab, strategy, rng);
  };
  return inv;
}

// --- immediate-mode wrappers -----------------------------------------------

KernelSpec matmul(const Tensor& a, const Tensor& b, Tensor& out) {
  auto inv = make_matmul(a, b, out);
  inv.run();
  return inv.spec;
}

KernelSpec layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps,
                     Tensor& out) {
  auto inv = make_layernorm(x, gamma, beta, eps, out);
  inv.run();
  return inv.spec;
}

KernelSpec attention(const Tensor& q, const KvCache& kv, float scale, Tensor& out) {
  if (kv.cur_len() == 0) raise(Errc::EmptyCache, "attention over an empty cache");
  auto inv = make_attention(q, kv, 0, kv.cur_len(), scale, out);
  inv.run();
  return inv.spec;
}

KernelSpec embedding_lookup(const std::vector<int>& ids, const Tensor& table, Tensor& out) {
  auto inv = make_embedding_lookup(ids, table, out);
  inv.run();
  return inv.spec;
}

KernelSpec kv_append(KvCache& kv, const Tensor& k_new, const Tensor& v_new) {
  auto inv = make_kv_append(kv, k_new, v_new);
  inv.run();
  return inv.spec;
}

int sample_token(const Tensor& logits, const SampleStrategy& strategy, SamplerRng& rng) {
  int out = -1;
  auto inv = make_sample_token(logits, strategy, &rng, &out);
  inv.run();
  return out;
}

}  // namespace graphrt
