#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pcp/embedding.hpp"
#include "pcp/simnet.hpp"

namespace pcp::testing {

/// He-uniform weights plus small random biases so no parameter sits at zero.
inline SimilarityNet random_net(std::size_t dim, std::vector<std::size_t> hidden, std::uint64_t seed) {
    SimilarityNet net = SimilarityNet::he_uniform(dim, std::move(hidden), seed);
    std::mt19937_64 rng(seed ^ 0xA5A5A5A5ULL);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (auto& layer : net.layers()) {
        for (double& b : layer.bias) b = u(rng);
    }
    return net;
}

/// Episode drawn from a freshly generated Gaussian benchmark with exactly `ways` classes.
inline Episode random_episode(std::size_t ways, std::size_t shots, std::size_t queries, std::size_t dim,
                              std::uint64_t seed, double within_std = 1.0) {
    SyntheticConfig cfg;
    cfg.dimension = dim;
    cfg.train_classes = 1;
    cfg.test_classes = ways;
    cfg.samples_per_class = shots + queries;
    cfg.within_std = within_std;
    cfg.seed = seed;
    const auto data = generate_synthetic(cfg);
    Rng rng(seed + 1);
    return sample_episode(data.test, ways, shots, queries, rng);
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& name) {
        path_ = std::filesystem::temp_directory_path() /
                (name + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    std::filesystem::path path_;
};

}  // namespace pcp::testing
