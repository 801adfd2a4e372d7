#include "pcp/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pcp/errors.hpp"

namespace pcp {

using json = nlohmann::json;

namespace {

std::vector<DenseLayer> make_layers(std::size_t input_dim, const std::vector<std::size_t>& hidden) {
    std::vector<DenseLayer> layers;
    std::size_t in = input_dim;
    for (std::size_t h : hidden) {
        layers.emplace_back(in, h);
        in = h;
    }
    layers.emplace_back(in, 1);
    return layers;
}

void check_dims(std::size_t input_dim, const std::vector<std::size_t>& hidden) {
    if (input_dim == 0) throw ShapeError("input dimension must be positive");
    if (hidden.empty()) throw ShapeError("at least one hidden layer is required");
    if (std::find(hidden.begin(), hidden.end(), std::size_t{0}) != hidden.end()) {
        throw ShapeError("hidden widths must be positive");
    }
}

// Dense layer y = W x + b, optionally followed by ReLU.
// Four interleaved partial sums, combined in a fixed order.
double dot(const double* w, const double* x, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += w[i] * x[i];
        s1 += w[i + 1] * x[i + 1];
        s2 += w[i + 2] * x[i + 2];
        s3 += w[i + 3] * x[i + 3];
    }
    for (; i < n; ++i) s0 += w[i] * x[i];
    return (s0 + s1) + (s2 + s3);
}

void apply(const DenseLayer& layer, std::span<const double> x, std::span<double> y, bool relu) {
    for (std::size_t o = 0; o < layer.out; ++o) {
        const double acc = layer.bias[o] + dot(layer.weights.data() + o * layer.in, x.data(), layer.in);
        y[o] = relu ? std::max(acc, 0.0) : acc;
    }
}

}  // namespace

double sigmoid(double x) {
    static constexpr double lo = std::numeric_limits<double>::min();
    static const double hi = std::nextafter(1.0, 0.0);
    const double s = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    return std::clamp(s, lo, hi);
}

void absolute_difference(std::span<const double> a, std::span<const double> b,
                         std::span<double> out) {
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::abs(a[i] - b[i]);
}

void GradientBundle::set_zero() {
    for (auto& l : layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
}

bool GradientBundle::all_finite() const {
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return std::all_of(layers.begin(), layers.end(),
                       [&](const DenseLayer& l) { return finite(l.weights) && finite(l.bias); });
}

std::size_t GradientBundle::size() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

double& GradientBundle::at(std::size_t flat_index) {
    for (auto& l : layers) {
        if (flat_index < l.weights.size()) return l.weights[flat_index];
        flat_index -= l.weights.size();
        if (flat_index < l.bias.size()) return l.bias[flat_index];
        flat_index -= l.bias.size();
    }
    throw ShapeError("flat parameter index out of range");
}

double GradientBundle::at(std::size_t flat_index) const {
    return const_cast<GradientBundle*>(this)->at(flat_index);
}

SimilarityNet::SimilarityNet(std::size_t input_dim, std::vector<std::size_t> hidden_dims)
    : input_dim_(input_dim), hidden_dims_(std::move(hidden_dims)) {
    check_dims(input_dim_, hidden_dims_);
    layers_ = make_layers(input_dim_, hidden_dims_);
}

SimilarityNet SimilarityNet::he_uniform(std::size_t input_dim, std::vector<std::size_t> hidden_dims,
                                        std::uint64_t seed) {
    SimilarityNet net(input_dim, std::move(hidden_dims));
    std::mt19937_64 rng(seed);
    for (auto& layer : net.layers_) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : layer.weights) w = dist(rng);
    }
    return net;
}

SimilarityNet SimilarityNet::from_layers(std::size_t input_dim, std::vector<std::size_t> hidden_dims,
                                         std::vector<DenseLayer> layers) {
    check_dims(input_dim, hidden_dims);
    if (layers.size() != hidden_dims.size() + 1) {
        throw ShapeError("expected " + std::to_string(hidden_dims.size() + 1) + " layers, got " +
                         std::to_string(layers.size()));
    }
    std::size_t in = input_dim;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::size_t out = l < hidden_dims.size() ? hidden_dims[l] : 1;
        const auto& layer = layers[l];
        if (layer.in != in || layer.out != out || layer.weights.size() != in * out ||
            layer.bias.size() != out) {
            throw ShapeError("layer " + std::to_string(l) + " does not chain " + std::to_string(in) +
                             " -> " + std::to_string(out));
        }
        in = out;
    }
    SimilarityNet net;
    net.input_dim_ = input_dim;
    net.hidden_dims_ = std::move(hidden_dims);
    net.layers_ = std::move(layers);
    return net;
}

std::size_t SimilarityNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

double SimilarityNet::logit(std::span<const double> input) const {
    if (input.size() != input_dim_) {
        throw ShapeError("input of dimension " + std::to_string(input.size()) + ", net expects " +
                         std::to_string(input_dim_));
    }
    thread_local std::vector<double> cur, next;
    cur.assign(input.begin(), input.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        next.resize(layers_[l].out);
        apply(layers_[l], cur, next, l + 1 < layers_.size());
        std::swap(cur, next);
    }
    return cur[0];
}

double SimilarityNet::forward(std::span<const double> input) const { return sigmoid(logit(input)); }

double SimilarityNet::compare(std::span<const double> a, std::span<const double> b) const {
    if (a.size() != b.size()) throw ShapeError("compared embeddings differ in dimension");
    thread_local std::vector<double> diff;
    diff.resize(a.size());
    absolute_difference(a, b, diff);
    return forward(diff);
}

GradientBundle SimilarityNet::zero_gradient() const {
    return GradientBundle{make_layers(input_dim_, hidden_dims_)};
}

void SimilarityNet::accumulate_logit_gradient(std::span<const double> input, double scale,
                                              GradientBundle& grad) const {
    if (input.size() != input_dim_) throw ShapeError("gradient input dimension mismatch");
    if (grad.layers.size() != layers_.size()) throw ShapeError("gradient bundle shape mismatch");

    // activations[l] is the input to layer l.
    thread_local std::vector<std::vector<double>> activations;
    activations.resize(layers_.size() + 1);
    activations[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        activations[l + 1].resize(layers_[l].out);
        apply(layers_[l], activations[l], activations[l + 1], l + 1 < layers_.size());
    }

    thread_local std::vector<double> delta, prev;
    delta.assign(1, scale);
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& layer = layers_[l];
        auto& g = grad.layers[l];
        const auto& x = activations[l];
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            double* gw = g.weights.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * x[i];
            g.bias[o] += d;
        }
        if (l == 0) break;
        prev.assign(layer.in, 0.0);
        for (std::size_t o = 0; o < layer.out; ++o) {
            const double d = delta[o];
            if (d == 0.0) continue;
            const double* w = layer.weights.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) prev[i] += w[i] * d;
        }
        // ReLU derivative, taken as 0 at the kink.
        for (std::size_t i = 0; i < layer.in; ++i) {
            if (x[i] <= 0.0) prev[i] = 0.0;
        }
        std::swap(delta, prev);
    }
}

std::uint64_t SimilarityNet::parameter_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    mix(&input_dim_, sizeof(input_dim_));
    for (std::size_t d : hidden_dims_) mix(&d, sizeof(d));
    for (const auto& l : layers_) {
        mix(l.weights.data(), l.weights.size() * sizeof(double));
        mix(l.bias.data(), l.bias.size() * sizeof(double));
    }
    return h;
}

std::string checkpoint_to_string(const SimilarityNet& net) {
    json layers = json::array();
    for (const auto& l : net.layers()) {
        json rows = json::array();
        for (std::size_t o = 0; o < l.out; ++o) {
            rows.push_back(std::vector<double>(l.weights.begin() + o * l.in,
                                               l.weights.begin() + (o + 1) * l.in));
        }
        layers.push_back({{"w", std::move(rows)}, {"b", l.bias}});
    }
    json j = {{"input_dim", net.input_dim()}, {"hidden_dims", net.hidden_dims()}, {"layers", layers}};
    return j.dump();
}

SimilarityNet checkpoint_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
    try {
        const auto input_dim = j.at("input_dim").get<std::size_t>();
        auto hidden = j.at("hidden_dims").get<std::vector<std::size_t>>();
        std::vector<DenseLayer> layers;
        for (const auto& jl : j.at("layers")) {
            const auto rows = jl.at("w").get<std::vector<std::vector<double>>>();
            DenseLayer layer;
            layer.out = rows.size();
            layer.in = rows.empty() ? 0 : rows.front().size();
            for (const auto& r : rows) {
                if (r.size() != layer.in) throw ShapeError("checkpoint weight rows are ragged");
                layer.weights.insert(layer.weights.end(), r.begin(), r.end());
            }
            layer.bias = jl.at("b").get<std::vector<double>>();
            layers.push_back(std::move(layer));
        }
        return SimilarityNet::from_layers(input_dim, std::move(hidden), std::move(layers));
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const SimilarityNet& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << checkpoint_to_string(net) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

SimilarityNet load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_string(buf.str());
}

}  // namespace pcp
