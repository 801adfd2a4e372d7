#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pcp {

/// Fully connected layer, `weights` is out x in, row-major.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in_dim, std::size_t out_dim)
        : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

    bool operator==(const DenseLayer&) const = default;
};

/// Gradient (or optimizer moment) storage shaped like a SimilarityNet.
struct GradientBundle {
    std::vector<DenseLayer> layers;

    void set_zero();
    bool all_finite() const;
    std::size_t size() const;
    /// Flat view order: layer 0 weights, layer 0 bias, layer 1 weights, ...
    double& at(std::size_t flat_index);
    double at(std::size_t flat_index) const;
};

/// Learned comparator: MLP with ReLU hidden layers and a single sigmoid output.
/// Input is the element-wise absolute difference of two embeddings.
class SimilarityNet {
public:
    SimilarityNet() = default;

    /// All weights and biases zero.
    SimilarityNet(std::size_t input_dim, std::vector<std::size_t> hidden_dims);

    /// He-uniform weights (limit sqrt(6 / fan_in)), zero biases.
    static SimilarityNet he_uniform(std::size_t input_dim, std::vector<std::size_t> hidden_dims,
                                    std::uint64_t seed);

    /// Throws ShapeError unless layers chain input_dim -> hidden... -> 1.
    static SimilarityNet from_layers(std::size_t input_dim, std::vector<std::size_t> hidden_dims,
                                     std::vector<DenseLayer> layers);

    std::size_t input_dim() const { return input_dim_; }
    const std::vector<std::size_t>& hidden_dims() const { return hidden_dims_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    std::size_t parameter_count() const;

    /// Pre-sigmoid output.
    double logit(std::span<const double> input) const;
    /// sigma(logit(input)), strictly inside (0, 1) for finite input.
    double forward(std::span<const double> input) const;
    /// forward(|a - b|).
    double compare(std::span<const double> a, std::span<const double> b) const;

    GradientBundle zero_gradient() const;

    /// Adds scale * d logit / d params at `input` into `grad`.
    void accumulate_logit_gradient(std::span<const double> input, double scale,
                                   GradientBundle& grad) const;

    /// FNV-1a over shapes and raw parameter bytes.
    std::uint64_t parameter_hash() const;

    bool operator==(const SimilarityNet&) const = default;

private:
    std::size_t input_dim_ = 0;
    std::vector<std::size_t> hidden_dims_;
    std::vector<DenseLayer> layers_;
};

inline constexpr std::size_t kDefaultHidden = 64;

/// Logistic function evaluated without overflow. Clamped to the open interval
/// (0, 1) so saturated logits never yield exact 0 or 1.
double sigmoid(double x);

void absolute_difference(std::span<const double> a, std::span<const double> b,
                         std::span<double> out);

std::string checkpoint_to_string(const SimilarityNet& net);
SimilarityNet checkpoint_from_string(const std::string& text);
void save_checkpoint(const SimilarityNet& net, const std::filesystem::path& path);
SimilarityNet load_checkpoint(const std::filesystem::path& path);

}  // namespace pcp
