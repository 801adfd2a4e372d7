#include "pcp/losses.hpp"

#include <vector>

#include "pcp/errors.hpp"

namespace pcp {

LossResult loss_inter(const SimilarityNet& classifier, const Episode& episode,
                      const Prototypes& prototypes) {
    const Matrix& p = prototypes.vectors;
    const std::size_t q = episode.query.size();
    if (q == 0) throw ShapeError("episode has no queries");
    if (p.rows() != episode.ways || p.cols() != episode.dimension()) {
        throw ShapeError("prototypes do not match the episode shape");
    }
    if (p.cols() != classifier.input_dim()) throw ShapeError("classifier input dimension mismatch");

    LossResult out{0.0, classifier.zero_gradient()};
    const double norm = 1.0 / static_cast<double>(q);
    std::vector<double> diff(p.cols());
    for (std::size_t i = 0; i < q; ++i) {
        const auto& x = episode.query[i].embedding;
        for (std::size_t n = 0; n < p.rows(); ++n) {
            absolute_difference(x, p.row(n), diff);
            const double s = classifier.forward(diff);
            const double target = n == episode.query_targets[i] ? 1.0 : 0.0;
            const double err = s - target;
            out.loss += norm * err * err;
            classifier.accumulate_logit_gradient(diff, 2.0 * norm * err * s * (1.0 - s), out.gradient);
        }
    }
    return out;
}

LossResult loss_intra(const SimilarityNet& relation, const Episode& episode) {
    const std::size_t q = episode.query.size();
    if (q < 2) throw InsufficientPairsError("relation loss needs at least 2 queries");
    if (episode.dimension() != relation.input_dim()) throw ShapeError("relation input dimension mismatch");

    LossResult out{0.0, relation.zero_gradient()};
    const double norm = 1.0 / (static_cast<double>(q) * static_cast<double>(q));
    std::vector<double> diff(relation.input_dim());
    // r_{i,j} == r_{j,i}, so each unordered pair stands for two ordered terms.
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = i + 1; j < q; ++j) {
            absolute_difference(episode.query[i].embedding, episode.query[j].embedding, diff);
            const double r = relation.forward(diff);
            const double target = episode.query_targets[i] == episode.query_targets[j] ? 1.0 : 0.0;
            const double err = r - target;
            out.loss += 2.0 * norm * err * err;
            relation.accumulate_logit_gradient(diff, 4.0 * norm * err * r * (1.0 - r), out.gradient);
        }
    }
    return out;
}

}  // namespace pcp
