#pragma once

#include "pcp/embedding.hpp"
#include "pcp/purification.hpp"
#include "pcp/simnet.hpp"

namespace pcp {

struct LossResult {
    double loss = 0.0;
    GradientBundle gradient;
};

/// Query-to-prototype regression loss:
///   (1 / NM) * sum_i [ (1 - s_{i,y_i})^2 + sum_{n != y_i} s_{i,n}^2 ]
/// with s_{i,n} = classifier(|q_i - p_n|). Gradient is with respect to the
/// classifier parameters.
LossResult loss_inter(const SimilarityNet& classifier, const Episode& episode,
                      const Prototypes& prototypes);

/// Pairwise query relation loss over ordered pairs i != j, target 1 for equal
/// labels and 0 otherwise. Normalised by (NM)^2, not by the NM(NM - 1) pair count.
LossResult loss_intra(const SimilarityNet& relation, const Episode& episode);

}  // namespace pcp
