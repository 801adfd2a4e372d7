#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pcp/matrix.hpp"

namespace pcp {

/// Feature vector produced by an external extractor. Entries are finite.
using Embedding = std::vector<double>;

/// Episode and sampler randomness. The engine is fully specified by the
/// standard, so streams are reproducible for a given seed.
using Rng = std::mt19937_64;

/// Independent sub-seed for stream `stream` of a base seed (splitmix64 mix).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct LabeledSample {
    Embedding embedding;
    std::string label;

    bool operator==(const LabeledSample&) const = default;
};

enum class Split { train, validation, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);

struct EmbeddingDataset {
    Split split = Split::test;
    std::map<std::string, std::vector<Embedding>> classes;

    /// Dimension of the first embedding, 0 when the dataset is empty.
    std::size_t dimension() const;
    std::size_t sample_count() const;

    bool operator==(const EmbeddingDataset&) const = default;
};

/// Throws if any embedding is non-finite, dimensions disagree, or a class is empty.
void validate(const EmbeddingDataset& dataset);

/// Scales every embedding to unit L2 norm. Zero vectors are left as is.
void l2_normalize(EmbeddingDataset& dataset);

/// One N-way K-shot task. Local class indices follow `class_map` order.
struct Episode {
    std::size_t ways = 0;
    std::size_t shots = 0;
    std::size_t queries_per_class = 0;
    std::vector<LabeledSample> support;
    std::vector<LabeledSample> query;
    std::vector<std::string> class_map;
    std::vector<std::size_t> support_targets;
    std::vector<std::size_t> query_targets;

    std::size_t dimension() const;
    /// Local index of a class identifier; throws MissingClassError if absent.
    std::size_t local_index(const std::string& label) const;
    Matrix query_matrix() const;

    bool operator==(const Episode&) const = default;
};

/// Builds an episode from explicit samples; labels index into `class_map`.
Episode make_episode(std::vector<std::string> class_map, std::vector<LabeledSample> support,
                     std::vector<LabeledSample> query);

/// Draws N classes uniformly without replacement, then K + M distinct samples
/// per class: the first K go to the support set and the next M to the query set.
Episode sample_episode(const EmbeddingDataset& dataset, std::size_t ways, std::size_t shots,
                       std::size_t queries_per_class, Rng& rng);

/// FNV-1a hash over labels and embedding bytes, for checking paired sampling.
std::uint64_t episode_fingerprint(const Episode& episode);

struct SyntheticConfig {
    std::size_t dimension = 16;
    std::size_t train_classes = 40;
    std::size_t test_classes = 20;
    std::size_t samples_per_class = 50;
    double mean_scale = 1.0;
    double within_std = 1.25;
    std::uint64_t seed = 7;

    bool operator==(const SyntheticConfig&) const = default;
};

void validate(const SyntheticConfig& config);

struct SyntheticData {
    EmbeddingDataset train;
    EmbeddingDataset test;
};

/// Isotropic Gaussian classes: mean ~ N(0, mean_scale^2 I), sample = mean + N(0, within_std^2 I).
SyntheticData generate_synthetic(const SyntheticConfig& config);

SyntheticConfig load_synthetic_config(const std::filesystem::path& path);
void save_synthetic_config(const SyntheticConfig& config, const std::filesystem::path& path);

/// JSON Lines, one `{"label": ..., "embedding": [...]}` record per sample.
EmbeddingDataset load_dataset(const std::filesystem::path& path, Split split = Split::test);
void write_dataset(const EmbeddingDataset& dataset, const std::filesystem::path& path);

}  // namespace pcp
