#include "pcp/purification.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "pcp/errors.hpp"

namespace pcp {

using json = nlohmann::json;

std::string_view to_string(AblationMode mode) {
    switch (mode) {
        case AblationMode::baseline: return "baseline";
        case AblationMode::ref_all: return "ref_all";
        case AblationMode::sel_by_score: return "sel_by_score";
        case AblationMode::intra_pos_only: return "intra_pos_only";
        case AblationMode::full: return "full";
    }
    return "full";
}

AblationMode parse_mode(std::string_view name) {
    for (AblationMode m : kAblationLadder) {
        if (to_string(m) == name) return m;
    }
    throw ConfigError("unknown mode '" + std::string(name) + "'");
}

void validate(const PcpConfig& config) {
    if (config.top_l == 0) throw ConfigError("top_l must be at least 1");
    if (!std::isfinite(config.lambda) || config.lambda < 0.0 || config.lambda > 1.0) {
        throw ConfigError("lambda must lie in [0, 1]");
    }
}

Prototypes compute_prototypes(std::span<const LabeledSample> support,
                              std::span<const std::string> class_map) {
    if (support.empty()) throw MissingClassError("empty support set");
    const std::size_t dim = support.front().embedding.size();
    Prototypes p{Matrix(class_map.size(), dim), 0};
    std::vector<std::size_t> counts(class_map.size(), 0);
    for (const auto& s : support) {
        const auto it = std::find(class_map.begin(), class_map.end(), s.label);
        if (it == class_map.end()) throw MissingClassError("support label '" + s.label + "' not mapped");
        if (s.embedding.size() != dim) throw ShapeError("support embeddings differ in dimension");
        const auto n = static_cast<std::size_t>(it - class_map.begin());
        auto row = p.vectors.row(n);
        for (std::size_t d = 0; d < dim; ++d) row[d] += s.embedding[d];
        ++counts[n];
    }
    for (std::size_t n = 0; n < class_map.size(); ++n) {
        if (counts[n] == 0) throw MissingClassError("class '" + class_map[n] + "' has no support samples");
        for (double& v : p.vectors.row(n)) v /= static_cast<double>(counts[n]);
    }
    return p;
}

Prototypes compute_prototypes(const Episode& episode) {
    return compute_prototypes(episode.support, episode.class_map);
}

ClusterAssignment assign_clusters(const ScoreMatrix& scores) {
    const Matrix& s = scores.scores;
    ClusterAssignment a;
    a.predicted.resize(s.rows());
    a.members.resize(s.cols());
    for (std::size_t i = 0; i < s.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t n = 1; n < s.cols(); ++n) {
            if (s(i, n) > s(i, best)) best = n;
        }
        a.predicted[i] = best;
        a.members[best].push_back(i);
    }
    return a;
}

std::pair<ScoreMatrix, ClusterAssignment> classify(const Matrix& queries, const Prototypes& prototypes,
                                                   const SimilarityNet& classifier) {
    const Matrix& p = prototypes.vectors;
    if (p.rows() == 0) throw ShapeError("no prototypes");
    if (queries.cols() != p.cols() || queries.cols() != classifier.input_dim()) {
        throw ShapeError("query, prototype and classifier dimensions differ");
    }
    ScoreMatrix scores{Matrix(queries.rows(), p.rows())};
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        for (std::size_t n = 0; n < p.rows(); ++n) {
            scores.scores(i, n) = classifier.compare(queries.row(i), p.row(n));
        }
    }
    auto assignment = assign_clusters(scores);
    return {std::move(scores), std::move(assignment)};
}

RelationMatrix relation_matrix(const Matrix& queries, const SimilarityNet& relation) {
    const std::size_t q = queries.rows();
    if (q < 2) throw InsufficientPairsError("relation matrix needs at least 2 queries");
    if (queries.cols() != relation.input_dim()) throw ShapeError("query and relation net dimensions differ");
    RelationMatrix out{Matrix(q, q)};
    const std::vector<double> zero(queries.cols(), 0.0);
    const double self = relation.forward(zero);
    for (std::size_t i = 0; i < q; ++i) {
        out.r(i, i) = self;
        for (std::size_t j = i + 1; j < q; ++j) {
            const double v = relation.compare(queries.row(i), queries.row(j));
            out.r(i, j) = v;
            out.r(j, i) = v;
        }
    }
    return out;
}

DegreeTable degrees(const ClusterAssignment& assignment, const RelationMatrix& relations,
                    double lambda) {
    const std::size_t q = assignment.predicted.size();
    if (relations.r.rows() != q || relations.r.cols() != q) {
        throw ShapeError("relation matrix does not match the assignment");
    }
    DegreeTable t;
    t.lambda = lambda;
    t.positive.assign(q, 0.0);
    t.negative.assign(q, 0.0);
    t.fused.assign(q, 0.0);
    for (std::size_t i = 0; i < q; ++i) {
        const std::size_t own = assignment.predicted[i];
        bool have_other = false;
        double neg = 0.0;
        for (std::size_t n = 0; n < assignment.members.size(); ++n) {
            const auto& members = assignment.members[n];
            if (n == own) {
                if (members.size() < 2) continue;
                double sum = 0.0;
                for (std::size_t j : members) {
                    if (j != i) sum += relations.r(i, j);
                }
                t.positive[i] = sum / static_cast<double>(members.size() - 1);
            } else {
                if (members.empty()) continue;
                double sum = 0.0;
                for (std::size_t j : members) sum += relations.r(i, j);
                const double mean = sum / static_cast<double>(members.size());
                neg = have_other ? std::max(neg, mean) : mean;
                have_other = true;
            }
        }
        t.negative[i] = neg;
        t.fused[i] = t.positive[i] - lambda * neg;
    }
    return t;
}

Prototypes refine_prototypes(const Prototypes& prototypes, const ClusterAssignment& assignment,
                             std::span<const double> rank_key, const Matrix& queries,
                             std::size_t top_l) {
    const Matrix& p = prototypes.vectors;
    if (assignment.members.size() != p.rows()) throw ShapeError("assignment and prototypes differ in ways");
    if (rank_key.size() != queries.rows() || queries.cols() != p.cols()) {
        throw ShapeError("ranking key, queries and prototypes do not match");
    }
    Prototypes next{p, prototypes.iteration + 1};
    std::vector<std::size_t> ranked;
    for (std::size_t n = 0; n < p.rows(); ++n) {
        ranked = assignment.members[n];
        if (ranked.empty()) continue;
        std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
            return rank_key[a] > rank_key[b] || (rank_key[a] == rank_key[b] && a < b);
        });
        const std::size_t take = std::min(top_l, ranked.size());
        auto row = next.vectors.row(n);
        for (std::size_t k = 0; k < take; ++k) {
            const auto q = queries.row(ranked[k]);
            for (std::size_t d = 0; d < row.size(); ++d) row[d] += q[d];
        }
        for (double& v : row) v /= static_cast<double>(take + 1);
    }
    return next;
}

Prototypes refine_prototypes(const Prototypes& prototypes, const ClusterAssignment& assignment,
                             const DegreeTable& degrees, const Matrix& queries, std::size_t top_l) {
    return refine_prototypes(prototypes, assignment, degrees.fused, queries, top_l);
}

PcpResult pcp_run(const Episode& episode, const SimilarityNet& classifier,
                  const SimilarityNet& relation, const PcpConfig& config) {
    validate(config);
    const Matrix queries = episode.query_matrix();
    const std::size_t iterations = config.effective_iterations();
    const bool needs_relations =
        iterations > 0 &&
        (config.mode == AblationMode::intra_pos_only || config.mode == AblationMode::full);

    // Queries are fixed across iterations, so pairwise relations are too.
    RelationMatrix relations;
    if (needs_relations && queries.rows() >= 2) relations = relation_matrix(queries, relation);

    PcpResult result;
    result.prototypes.push_back(compute_prototypes(episode));
    auto [scores, assignment] = classify(queries, result.prototypes.back(), classifier);
    result.assignments.push_back(assignment);

    std::vector<double> key(queries.rows());
    for (std::size_t t = 0; t < iterations; ++t) {
        std::size_t top_l = config.top_l;
        switch (config.mode) {
            case AblationMode::baseline:
                break;
            case AblationMode::ref_all:
                top_l = kAllMembers;
                std::fill(key.begin(), key.end(), 0.0);
                break;
            case AblationMode::sel_by_score:
                for (std::size_t i = 0; i < key.size(); ++i) key[i] = scores.scores(i, assignment.predicted[i]);
                break;
            case AblationMode::intra_pos_only:
            case AblationMode::full:
                if (relations.r.empty()) {
                    std::fill(key.begin(), key.end(), 0.0);
                } else {
                    const double lambda = config.mode == AblationMode::full ? config.lambda : 0.0;
                    key = degrees(assignment, relations, lambda).fused;
                }
                break;
        }
        result.prototypes.push_back(
            refine_prototypes(result.prototypes.back(), assignment, key, queries, top_l));
        std::tie(scores, assignment) = classify(queries, result.prototypes.back(), classifier);
        result.assignments.push_back(assignment);
    }
    result.final_assignment = result.assignments.back();
    return result;
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> targets) {
    if (predicted.size() != targets.size()) throw ShapeError("prediction and target counts differ");
    if (predicted.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == targets[i];
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

void write_trace(const PcpResult& result, const Episode& episode, std::ostream& out) {
    for (std::size_t t = 0; t < result.assignments.size(); ++t) {
        const Matrix& p = result.prototypes[t].vectors;
        json rows = json::array();
        for (std::size_t n = 0; n < p.rows(); ++n) {
            rows.push_back(std::vector<double>(p.row(n).begin(), p.row(n).end()));
        }
        const auto& predicted = result.assignments[t].predicted;
        out << json{{"t", t},
                    {"prototypes", std::move(rows)},
                    {"predicted", predicted},
                    {"accuracy", accuracy(predicted, episode.query_targets)}}
                   .dump()
            << '\n';
    }
}

void write_trace(const PcpResult& result, const Episode& episode, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace " + path.string());
    write_trace(result, episode, out);
}

}  // namespace pcp
