#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcp/embedding.hpp"
#include "pcp/purification.hpp"
#include "pcp/simnet.hpp"

namespace pcp {

/// Episode shape plus purification settings for one evaluation.
struct EvalConfig {
    std::size_t ways = 5;
    std::size_t shots = 1;
    std::size_t queries = 15;
    PcpConfig pcp;

    bool operator==(const EvalConfig&) const = default;
};

/// Named lambda settings of the reference protocol.
enum class LambdaProfile { primary, secondary };

inline constexpr std::size_t kProtocolEpisodes = 10000;
inline constexpr double kZ95 = 1.96;

/// 5-way, 15 queries per class, L = 9, T = 3, lambda 0.8 (primary) or 0.6 (secondary).
EvalConfig protocol_eval_config(std::size_t shots = 1, LambdaProfile profile = LambdaProfile::primary);

struct Summary {
    double mean = 0.0;
    /// z * sample_std / sqrt(n), sample std with the n - 1 denominator; 0 for n < 2.
    double ci95 = 0.0;
};

Summary summarize(std::span<const double> values);

/// Mean and ci95 of the per-episode differences a[e] - b[e].
Summary paired_difference(std::span<const double> a, std::span<const double> b);

struct EvalReport {
    std::vector<double> per_episode_accuracy;
    double mean = 0.0;
    double ci95 = 0.0;
    std::size_t n_episodes = 0;
    std::uint64_t seed = 0;
    EvalConfig config;
    /// Order-sensitive hash of every sampled episode; equal digests mean equal episode sequences.
    std::uint64_t episodes_digest = 0;

    bool operator==(const EvalReport&) const = default;
};

/// Episode e is drawn from an Rng seeded with derive_seed(seed, e), so any two
/// evaluations with the same seed and shape see the same episodes.
EvalReport evaluate(const EmbeddingDataset& test, const SimilarityNet& classifier,
                    const SimilarityNet& relation, const EvalConfig& config, std::size_t n_episodes,
                    std::uint64_t seed);

enum class SweepAxis { iterations, top_l, lambda, ablation };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_axis(std::string_view name);

struct SweepPoint {
    /// For the ablation axis, the mode's position in kAblationLadder.
    double value = 0.0;
    EvalReport report;

    bool operator==(const SweepPoint&) const = default;
};

struct SweepReport {
    SweepAxis axis = SweepAxis::iterations;
    std::vector<SweepPoint> points;

    bool operator==(const SweepReport&) const = default;
};

/// One paired evaluation per value; values must be strictly increasing.
SweepReport run_sweep(SweepAxis axis, std::span<const double> values, const EvalConfig& base,
                      const EmbeddingDataset& test, const SimilarityNet& classifier,
                      const SimilarityNet& relation, std::size_t n_episodes, std::uint64_t seed);

/// `base` with `axis` set to `value`.
EvalConfig apply_axis(const EvalConfig& base, SweepAxis axis, double value);
/// Text form of a sweep value ("full" for the ablation axis, "0.6" for lambda).
std::string axis_value_label(SweepAxis axis, double value);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
std::string sweep_to_json(const SweepReport& sweep);
SweepReport sweep_from_json(const std::string& text);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// CSV `episode,accuracy`.
void write_episode_csv(const EvalReport& report, const std::filesystem::path& path);
/// CSV `axis_value,mean,ci95`.
void write_sweep_csv(const SweepReport& sweep, const std::filesystem::path& path);

}  // namespace pcp
