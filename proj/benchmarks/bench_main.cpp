#include <random>

#include <benchmark/benchmark.h>

#include "erpt/encoder.hpp"
#include "erpt/tensor.hpp"

namespace {

erpt::Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng) {
  erpt::Tensor t = erpt::Tensor::zeros(shape, false);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(12);
  erpt::Tensor a = random_tensor({n, n}, rng);
  erpt::Tensor b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    erpt::Tensor c = erpt::matmul(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(2 * n * n * n));
}
BENCHMARK(BM_matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_encode(benchmark::State& state) {
  erpt::EncoderConfig cfg;
  cfg.layers = 2;
  cfg.hidden_dim = 48;
  cfg.heads = 4;
  cfg.ffn_dim = 192;
  cfg.max_seq_len = 160;
  cfg.vocab_size = erpt::kNumReserved + 64;
  erpt::EncoderParams params = erpt::EncoderParams::init(cfg, 3);
  std::mt19937_64 rng(4);
  std::vector<int> ids;
  const auto len = static_cast<std::size_t>(state.range(0));
  for (std::size_t i = 0; i < len; ++i)
    ids.push_back(erpt::kNumReserved + static_cast<int>(rng() % 64));
  for (auto _ : state) {
    erpt::Tensor h = erpt::encode(ids, cfg, params);
    benchmark::DoNotOptimize(h.values().data());
  }
}
BENCHMARK(BM_encode)->Arg(64)->Arg(128)->Arg(160);

void BM_encode_backward(benchmark::State& state) {
  erpt::EncoderConfig cfg;
  cfg.layers = 2;
  cfg.hidden_dim = 48;
  cfg.heads = 4;
  cfg.ffn_dim = 192;
  cfg.max_seq_len = 160;
  cfg.vocab_size = erpt::kNumReserved + 64;
  erpt::EncoderParams params = erpt::EncoderParams::init(cfg, 3);
  std::mt19937_64 rng(4);
  std::vector<int> ids;
  const auto len = static_cast<std::size_t>(state.range(0));
  for (std::size_t i = 0; i < len; ++i)
    ids.push_back(erpt::kNumReserved + static_cast<int>(rng() % 64));
  erpt::Tensor w = random_tensor({cfg.hidden_dim, 1}, rng);
  for (auto _ : state) {
    erpt::Tensor h = erpt::encode(ids, cfg, params);
    erpt::Tensor loss = erpt::mean_axis(erpt::matmul(h, w), 0);
    erpt::backward(loss);
    for (auto& [name, p] : params.named()) {
      (void)name;
      const_cast<erpt::Tensor&>(p).zero_grad();
    }
    benchmark::DoNotOptimize(h.values().data());
  }
}
BENCHMARK(BM_encode_backward)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
