#include "pcp/adam.hpp"

#include <cmath>

#include "pcp/errors.hpp"

namespace pcp {

AdamState make_adam_state(const SimilarityNet& net, double learning_rate) {
    AdamState s;
    s.first_moment = net.zero_gradient();
    s.second_moment = net.zero_gradient();
    s.learning_rate = learning_rate;
    return s;
}

void adam_step(SimilarityNet& net, const GradientBundle& grad, AdamState& state) {
    auto& layers = net.layers();
    auto& m = state.first_moment.layers;
    auto& v = state.second_moment.layers;
    if (grad.layers.size() != layers.size() || m.size() != layers.size() || v.size() != layers.size()) {
        throw ShapeError("adam: gradient or moment layer count differs from the net");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& g = grad.layers[l];
        const auto same_shape = [&](const DenseLayer& other) {
            return other.weights.size() == layers[l].weights.size() &&
                   other.bias.size() == layers[l].bias.size();
        };
        if (!same_shape(g) || !same_shape(m[l]) || !same_shape(v[l])) {
            throw ShapeError("adam: layer " + std::to_string(l) + " shape mismatch");
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    auto update = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& m1,
                      std::vector<double>& m2) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            m1[i] = state.beta1 * m1[i] + (1.0 - state.beta1) * g[i];
            m2[i] = state.beta2 * m2[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m1[i] / c1;
            const double v_hat = m2[i] / c2;
            param[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weights, grad.layers[l].weights, m[l].weights, v[l].weights);
        update(layers[l].bias, grad.layers[l].bias, m[l].bias, v[l].bias);
    }
}

}  // namespace pcp
