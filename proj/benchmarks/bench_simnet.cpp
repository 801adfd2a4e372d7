#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pcp/losses.hpp"
#include "pcp/simnet.hpp"

namespace {

pcp::SyntheticData bench_data() {
    pcp::SyntheticConfig cfg;
    cfg.dimension = 16;
    cfg.train_classes = 10;
    cfg.test_classes = 5;
    cfg.samples_per_class = 30;
    return pcp::generate_synthetic(cfg);
}

}  // namespace

static void BM_forward(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto net = pcp::SimilarityNet::he_uniform(dim, {64, 64}, 3);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    std::vector<double> x(dim);
    for (double& v : x) v = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_forward)->RangeMultiplier(2)->Range(8, 128);

static void BM_loss_inter(benchmark::State& state) {
    const auto data = bench_data();
    pcp::Rng rng(11);
    const auto ep = pcp::sample_episode(data.train, 5, 5, 15, rng);
    const auto protos = pcp::compute_prototypes(ep);
    const auto net = pcp::SimilarityNet::he_uniform(16, {64, 64}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(pcp::loss_inter(net, ep, protos).loss);
}
BENCHMARK(BM_loss_inter)->Unit(benchmark::kMicrosecond);

static void BM_loss_intra(benchmark::State& state) {
    const auto data = bench_data();
    pcp::Rng rng(11);
    const auto ep = pcp::sample_episode(data.train, 5, 5, 15, rng);
    const auto net = pcp::SimilarityNet::he_uniform(16, {64, 64}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(pcp::loss_intra(net, ep).loss);
}
BENCHMARK(BM_loss_intra)->Unit(benchmark::kMillisecond);
