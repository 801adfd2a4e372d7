#include <gtest/gtest.h>

#include <cmath>

#include "pcp/adam.hpp"
#include "pcp/errors.hpp"
#include "support/fixtures.hpp"

namespace pcp {
namespace {

double sum_of_squares(const SimilarityNet& net) {
    double s = 0.0;
    for (const auto& l : net.layers()) {
        for (double w : l.weights) s += w * w;
        for (double b : l.bias) s += b * b;
    }
    return s;
}

TEST(Adam, ZeroGradientLeavesParametersAndCountsStep) {
    auto net = testing::random_net(4, {5, 3}, 2);
    const auto before = net;
    auto state = make_adam_state(net);
    adam_step(net, net.zero_gradient(), state);
    EXPECT_EQ(net, before);
    EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepMovesEachCoordinateByLearningRate) {
    auto net = testing::random_net(3, {4, 2}, 9);
    const auto before = net;
    auto state = make_adam_state(net, 1e-3);
    GradientBundle g = net.zero_gradient();
    for (std::size_t k = 0; k < g.size(); ++k) g.at(k) = (k % 2 ? -1.0 : 1.0) * (0.01 + 3.0 * k);
    adam_step(net, g, state);
    GradientBundle delta = net.zero_gradient();
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        for (std::size_t i = 0; i < net.layers()[l].weights.size(); ++i) {
            delta.layers[l].weights[i] = net.layers()[l].weights[i] - before.layers()[l].weights[i];
        }
        for (std::size_t i = 0; i < net.layers()[l].bias.size(); ++i) {
            delta.layers[l].bias[i] = net.layers()[l].bias[i] - before.layers()[l].bias[i];
        }
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_NEAR(std::abs(delta.at(k)), 1e-3, 1e-8) << k;
        EXPECT_LT(delta.at(k) * g.at(k), 0.0) << k;
    }
}

TEST(Adam, QuadraticLossDecreasesMonotonically) {
    SimilarityNet net(2, {3, 2});
    for (auto& l : net.layers()) {
        std::fill(l.weights.begin(), l.weights.end(), 1.0);
        std::fill(l.bias.begin(), l.bias.end(), 1.0);
    }
    auto state = make_adam_state(net, 1e-3);
    std::vector<double> trace{sum_of_squares(net)};
    for (int step = 0; step < 100; ++step) {
        GradientBundle g = net.zero_gradient();
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            for (std::size_t i = 0; i < g.layers[l].weights.size(); ++i) g.layers[l].weights[i] = 2.0 * net.layers()[l].weights[i];
            for (std::size_t i = 0; i < g.layers[l].bias.size(); ++i) g.layers[l].bias[i] = 2.0 * net.layers()[l].bias[i];
        }
        adam_step(net, g, state);
        trace.push_back(sum_of_squares(net));
    }
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LT(trace[i], trace[i - 1]) << i;
    EXPECT_EQ(state.step, 100u);
}

TEST(Adam, ShapeMismatchThrows) {
    auto net = SimilarityNet::he_uniform(3, {4, 2}, 1);
    auto state = make_adam_state(net);
    const auto other = SimilarityNet::he_uniform(3, {5, 2}, 1);
    EXPECT_THROW(adam_step(net, other.zero_gradient(), state), ShapeError);
    auto bad_state = make_adam_state(other);
    EXPECT_THROW(adam_step(net, net.zero_gradient(), bad_state), ShapeError);
}

}  // namespace
}  // namespace pcp
