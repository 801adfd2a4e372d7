#include "pcp/trainer.hpp"

#include <cmath>
#include <fstream>

#include "pcp/adam.hpp"
#include "pcp/errors.hpp"
#include "pcp/losses.hpp"

namespace pcp {

namespace {

constexpr std::uint64_t kInitStream = 100;
constexpr std::uint64_t kEpisodeStream = 200;
constexpr std::uint64_t kValidationStream = 300;

// Mean query accuracy over a fixed set of validation episodes.
double validation_accuracy(const EmbeddingDataset& validation, const TrainConfig& config,
                           const SimilarityNet& classifier, const SimilarityNet& relation,
                           const PcpConfig& pcp_config) {
    Rng rng(derive_seed(config.seed, kValidationStream));
    double total = 0.0;
    for (std::size_t e = 0; e < config.validation_episodes; ++e) {
        const Episode ep = sample_episode(validation, config.ways, config.eval_shots, config.queries, rng);
        const auto result = pcp_run(ep, classifier, relation, pcp_config);
        total += accuracy(result.final_assignment.predicted, ep.query_targets);
    }
    return total / static_cast<double>(config.validation_episodes);
}

template <typename LossFn, typename ScoreFn>
TrainedNet run_stage(const EmbeddingDataset& train, const TrainConfig& config, int stage,
                     std::size_t episodes, const EmbeddingDataset* validation, LossFn loss_fn,
                     ScoreFn score_fn) {
    validate(config);
    validate(train);
    TrainedNet out{initial_net(train.dimension(), config, stage), {}};
    auto& losses = stage == 1 ? out.log.stage1_loss : out.log.stage2_loss;
    losses.reserve(episodes);

    const bool select = validation != nullptr && config.validation_interval > 0 &&
                        config.validation_episodes > 0 && episodes > 0;
    SimilarityNet best = out.net;
    double best_accuracy = -1.0;

    AdamState adam = make_adam_state(out.net, config.learning_rate);
    Rng rng(derive_seed(config.seed, kEpisodeStream + static_cast<std::uint64_t>(stage)));
    for (std::size_t e = 0; e < episodes; ++e) {
        const Episode ep = sample_episode(train, config.ways, config.train_shots, config.queries, rng);
        LossResult step = loss_fn(out.net, ep);
        if (!std::isfinite(step.loss) || !step.gradient.all_finite()) {
            throw Error("stage " + std::to_string(stage) + ": non-finite loss at episode " +
                        std::to_string(e));
        }
        losses.push_back(step.loss);
        adam_step(out.net, step.gradient, adam);

        const bool checkpoint = (e + 1) % config.validation_interval == 0 || e + 1 == episodes;
        if (select && checkpoint) {
            const double acc = score_fn(out.net);
            out.log.validation.push_back({stage, e + 1, acc});
            if (acc > best_accuracy) {
                best_accuracy = acc;
                best = out.net;
            }
        }
    }
    if (select) out.net = std::move(best);
    return out;
}

}  // namespace

void validate(const TrainConfig& config) {
    if (config.ways == 0 || config.train_shots == 0 || config.eval_shots == 0 || config.queries == 0) {
        throw ConfigError("ways, shots and queries must be positive");
    }
    if (config.higher_shot && config.train_shots < config.eval_shots) {
        throw ConfigError("higher-shot training needs train_shots >= eval_shots");
    }
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    validate(config.validation_pcp);
}

std::size_t higher_shot_train_shots(std::size_t eval_shots) {
    if (eval_shots == 1) return 5;
    if (eval_shots == 5) return 10;
    return 2 * eval_shots;
}

SimilarityNet initial_net(std::size_t input_dim, const TrainConfig& config, int stage) {
    return SimilarityNet::he_uniform(input_dim, config.hidden_dims,
                                     derive_seed(config.seed, kInitStream + static_cast<std::uint64_t>(stage)));
}

TrainedNet train_stage1(const EmbeddingDataset& train, const TrainConfig& config,
                        const EmbeddingDataset* validation) {
    // Relation net is unused in baseline mode.
    const SimilarityNet unused(train.dimension(), {1});
    const PcpConfig baseline{0, 1, 0.0, AblationMode::baseline};
    return run_stage(
        train, config, 1, config.episodes_stage1, validation,
        [](const SimilarityNet& net, const Episode& ep) {
            return loss_inter(net, ep, compute_prototypes(ep));
        },
        [&](const SimilarityNet& net) {
            return validation_accuracy(*validation, config, net, unused, baseline);
        });
}

TrainedNet train_stage2(const EmbeddingDataset& train, const SimilarityNet& classifier,
                        const TrainConfig& config, const EmbeddingDataset* validation) {
    if (classifier.input_dim() != train.dimension()) {
        throw ShapeError("classifier input dimension does not match the training data");
    }
    return run_stage(
        train, config, 2, config.episodes_stage2, validation,
        [](const SimilarityNet& net, const Episode& ep) { return loss_intra(net, ep); },
        [&](const SimilarityNet& net) {
            return validation_accuracy(*validation, config, classifier, net, config.validation_pcp);
        });
}

void write_train_log(const TrainLog& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write train log " + path.string());
    out.precision(17);
    out << "episode,stage,loss\n";
    for (std::size_t e = 0; e < log.stage1_loss.size(); ++e) out << e << ",1," << log.stage1_loss[e] << '\n';
    for (std::size_t e = 0; e < log.stage2_loss.size(); ++e) out << e << ",2," << log.stage2_loss[e] << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace pcp
