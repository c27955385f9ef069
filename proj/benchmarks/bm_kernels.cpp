#include <benchmark/benchmark.h>

#include <random>

#include "graphrt/kernels.hpp"

using namespace graphrt;

namespace {

void fill(Tensor& t, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (float& x : t.data()) x = dist(eng);
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
  const auto m = state.range(0), k = state.range(1), n = state.range(2);
  Tensor a({m, k}), b({k, n}), out({m, n});
  fill(a, 1);
  fill(b, 2);
  for (auto _ : state) {
    matmul(a, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * m * k * n);
}
BENCHMARK(BM_Matmul)->Args({1, 64, 64})->Args({1, 64, 256})->Args({1, 256, 64});

static void BM_Layernorm(benchmark::State& state) {
  const auto d = state.range(0);
  Tensor x({1, d}), gamma({d}), beta({d}), out({1, d});
  fill(x, 1);
  fill(gamma, 2);
  fill(beta, 3);
  for (auto _ : state) {
    layernorm(x, gamma, beta, 1e-5f, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Layernorm)->Arg(64)->Arg(256);

static void BM_Attention(benchmark::State& state) {
  const int len = static_cast<int>(state.range(0));
  const int heads = 4, dh = 16;
  KvCache kv(1, 600, heads, dh);
  fill(kv.key(0), 1);
  fill(kv.value(0), 2);
  kv.set_len(len);
  Tensor q({1, heads * dh}), out({1, heads * dh});
  fill(q, 3);
  const float scale = 0.25f;
  for (auto _ : state) {
    attention(q, kv, scale, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * len);
}
BENCHMARK(BM_Attention)->Arg(16)->Arg(128)->Arg(512);
