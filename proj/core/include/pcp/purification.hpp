#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pcp/embedding.hpp"
#include "pcp/matrix.hpp"
#include "pcp/simnet.hpp"

namespace pcp {

/// Class representatives, one row per local class, at purification step `iteration`.
struct Prototypes {
    Matrix vectors;
    std::size_t iteration = 0;

    bool operator==(const Prototypes&) const = default;
};

/// Query-to-prototype similarity, (queries x ways), every entry in (0, 1).
struct ScoreMatrix {
    Matrix scores;

    bool operator==(const ScoreMatrix&) const = default;
};

struct ClusterAssignment {
    std::vector<std::size_t> predicted;
    /// members[n] lists the queries predicted as n, ascending.
    std::vector<std::vector<std::size_t>> members;

    bool operator==(const ClusterAssignment&) const = default;
};

/// Pairwise query relations. Exactly symmetric with a constant diagonal.
struct RelationMatrix {
    Matrix r;
};

struct DegreeTable {
    std::vector<double> positive;
    std::vector<double> negative;
    std::vector<double> fused;
    double lambda = 0.0;
};

/// How cluster members are chosen for prototype refinement.
enum class AblationMode {
    baseline,        // no refinement, classify with the support prototypes
    ref_all,         // refine with every cluster member
    sel_by_score,    // top-L by query-to-prototype score
    intra_pos_only,  // top-L by positive degree
    full,            // top-L by positive minus lambda-weighted negative degree
};

inline constexpr AblationMode kAblationLadder[] = {
    AblationMode::baseline, AblationMode::ref_all, AblationMode::sel_by_score,
    AblationMode::intra_pos_only, AblationMode::full};

std::string_view to_string(AblationMode mode);
AblationMode parse_mode(std::string_view name);

struct PcpConfig {
    std::size_t iterations = 3;
    std::size_t top_l = 9;
    double lambda = 0.8;
    AblationMode mode = AblationMode::full;

    /// Iterations actually run: 0 in baseline mode.
    std::size_t effective_iterations() const {
        return mode == AblationMode::baseline ? 0 : iterations;
    }

    bool operator==(const PcpConfig&) const = default;
};

void validate(const PcpConfig& config);

/// Mean of the support embeddings of each local class.
Prototypes compute_prototypes(std::span<const LabeledSample> support,
                              std::span<const std::string> class_map);
Prototypes compute_prototypes(const Episode& episode);

/// Argmax over each score row, ties to the smallest class index.
ClusterAssignment assign_clusters(const ScoreMatrix& scores);

std::pair<ScoreMatrix, ClusterAssignment> classify(const Matrix& queries, const Prototypes& prototypes,
                                                   const SimilarityNet& classifier);

RelationMatrix relation_matrix(const Matrix& queries, const SimilarityNet& relation);

DegreeTable degrees(const ClusterAssignment& assignment, const RelationMatrix& relations,
                    double lambda);

/// Per cluster: rank members by `rank_key` descending (ties to the smaller query
/// index), average the current prototype with the top min(L, size) members.
/// Empty clusters keep their prototype.
Prototypes refine_prototypes(const Prototypes& prototypes, const ClusterAssignment& assignment,
                             std::span<const double> rank_key, const Matrix& queries,
                             std::size_t top_l);
Prototypes refine_prototypes(const Prototypes& prototypes, const ClusterAssignment& assignment,
                             const DegreeTable& degrees, const Matrix& queries, std::size_t top_l);

inline constexpr std::size_t kAllMembers = std::numeric_limits<std::size_t>::max();

struct PcpResult {
    ClusterAssignment final_assignment;
    /// prototypes[t] and assignments[t] for t = 0..T; assignments.back() == final_assignment.
    std::vector<Prototypes> prototypes;
    std::vector<ClusterAssignment> assignments;
};

/// Iterative cluster purification over one episode.
PcpResult pcp_run(const Episode& episode, const SimilarityNet& classifier,
                  const SimilarityNet& relation, const PcpConfig& config);

/// Fraction of predictions equal to the targets.
double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> targets);

/// One JSON record per iteration: {"t", "prototypes", "predicted", "accuracy"}.
void write_trace(const PcpResult& result, const Episode& episode, std::ostream& out);
void write_trace(const PcpResult& result, const Episode& episode, const std::filesystem::path& path);

}  // namespace pcp
