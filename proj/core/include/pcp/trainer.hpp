#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "pcp/embedding.hpp"
#include "pcp/purification.hpp"
#include "pcp/simnet.hpp"

namespace pcp {

struct TrainConfig {
    std::size_t ways = 5;
    std::size_t train_shots = 5;
    std::size_t eval_shots = 1;
    std::size_t queries = 15;
    std::size_t episodes_stage1 = 20000;
    std::size_t episodes_stage2 = 10000;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    /// Train with more support shots than are used at evaluation time.
    bool higher_shot = true;
    /// Episodes between validation checkpoints; 0 disables selection.
    std::size_t validation_interval = 1000;
    std::size_t validation_episodes = 200;
    std::vector<std::size_t> hidden_dims{kDefaultHidden, kDefaultHidden};
    /// Purification settings used to score stage-2 validation checkpoints.
    PcpConfig validation_pcp;
};

void validate(const TrainConfig& config);

/// Training shots for a given evaluation shot count: 5 for 1-shot, 10 for 5-shot,
/// twice the evaluation shots otherwise.
std::size_t higher_shot_train_shots(std::size_t eval_shots);

struct ValidationPoint {
    int stage = 1;
    std::size_t episode = 0;
    double accuracy = 0.0;
};

struct TrainLog {
    std::vector<double> stage1_loss;
    std::vector<double> stage2_loss;
    std::vector<ValidationPoint> validation;
};

struct TrainedNet {
    SimilarityNet net;
    TrainLog log;
};

/// Fits the classification net on query-to-prototype scores of support-mean
/// prototypes, one Adam step per episode. Prototypes are never refined here.
/// With a validation set, the checkpoint with the best baseline accuracy is kept.
TrainedNet train_stage1(const EmbeddingDataset& train, const TrainConfig& config,
                        const EmbeddingDataset* validation = nullptr);

/// Fits the relation net on pairwise query labels; `classifier` is read only
/// and is used solely to score validation checkpoints.
TrainedNet train_stage2(const EmbeddingDataset& train, const SimilarityNet& classifier,
                        const TrainConfig& config, const EmbeddingDataset* validation = nullptr);

/// CSV with header `episode,stage,loss`.
void write_train_log(const TrainLog& log, const std::filesystem::path& path);

/// Initial weights used by each stage for a given config.
SimilarityNet initial_net(std::size_t input_dim, const TrainConfig& config, int stage);

}  // namespace pcp
