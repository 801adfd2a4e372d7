#include <benchmark/benchmark.h>

#include "pcp/purification.hpp"

static void BM_relation_matrix(benchmark::State& state) {
    pcp::SyntheticConfig cfg;
    cfg.test_classes = 5;
    cfg.train_classes = 1;
    cfg.samples_per_class = 16 + static_cast<std::size_t>(state.range(0));
    const auto data = pcp::generate_synthetic(cfg);
    pcp::Rng rng(2);
    const auto ep = pcp::sample_episode(data.test, 5, 1, static_cast<std::size_t>(state.range(0)), rng);
    const auto q = ep.query_matrix();
    const auto net = pcp::SimilarityNet::he_uniform(cfg.dimension, {64, 64}, 1);
    for (auto _ : state) benchmark::DoNotOptimize(pcp::relation_matrix(q, net));
}
BENCHMARK(BM_relation_matrix)->Arg(5)->Arg(15)->Arg(30)->Unit(benchmark::kMillisecond);

static void BM_pcp_run(benchmark::State& state) {
    const auto data = pcp::generate_synthetic({});
    const auto classifier = pcp::SimilarityNet::he_uniform(16, {64, 64}, 1);
    const auto relation = pcp::SimilarityNet::he_uniform(16, {64, 64}, 2);
    pcp::PcpConfig config;
    config.iterations = static_cast<std::size_t>(state.range(0));
    pcp::Rng rng(4);
    const auto ep = pcp::sample_episode(data.test, 5, 1, 15, rng);
    for (auto _ : state) benchmark::DoNotOptimize(pcp::pcp_run(ep, classifier, relation, config));
}
BENCHMARK(BM_pcp_run)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);
