#pragma once

#include <cstddef>

#include "pcp/simnet.hpp"

namespace pcp {

struct AdamState {
    std::size_t step = 0;
    GradientBundle first_moment;
    GradientBundle second_moment;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState make_adam_state(const SimilarityNet& net, double learning_rate = 1e-3);

/// One bias-corrected Adam update of every parameter; increments `state.step`.
void adam_step(SimilarityNet& net, const GradientBundle& grad, AdamState& state);

}  // namespace pcp
