#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/tensor.hpp"

namespace unlearn {

enum class Activation { relu, identity };

struct DenseLayer {
    Tensor weights; // [out x in]
    Tensor bias;    // [out]
    Activation activation = Activation::identity;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }
};

// Feed-forward classifier. Plain value type: training mutates a uniquely
// owned copy, evaluation on a snapshot is safe from any number of threads.
struct Network {
    std::vector<DenseLayer> layers;
    std::string arch_id;

    std::size_t input_dim() const { return layers.front().in_dim(); }
    std::size_t output_dim() const { return layers.back().out_dim(); }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weights.size() + l.bias.size();
        return n;
    }
};

// Per-layer parameter gradients, shapes mirroring the network.
struct Gradients {
    std::vector<Tensor> weight_grads;
    std::vector<Tensor> bias_grads;
};

// Activations cached by forward_trace for the matching backward call.
// activations[0] is the input batch, activations[L] the logits.
struct ForwardTrace {
    std::vector<Tensor> activations;
    bool empty() const { return activations.empty(); }
};

inline std::vector<std::size_t> parse_arch(const std::string& arch_id) {
    std::vector<std::size_t> dims;
    std::size_t pos = 0;
    while (pos <= arch_id.size()) {
        const std::size_t dash = arch_id.find('-', pos);
        const std::string tok = arch_id.substr(pos, dash == std::string::npos ? std::string::npos : dash - pos);
        if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
            throw ConfigError("malformed arch id '" + arch_id + "'");
        }
        const unsigned long v = std::stoul(tok);
        if (v == 0) throw ConfigError("arch id '" + arch_id + "' has a zero-width layer");
        dims.push_back(static_cast<std::size_t>(v));
        if (dash == std::string::npos) break;
        pos = dash + 1;
    }
    if (dims.size() < 2) {
        throw ConfigError("arch id '" + arch_id + "' needs at least input and output dims");
    }
    return dims;
}

// He-style fan-in scaled uniform init; bit-reproducible for a fixed seed.
// Hidden layers are relu, the output layer emits raw logits.
inline Network init_network(const std::string& arch_id, std::uint64_t seed) {
    const auto dims = parse_arch(arch_id);
    Rng rng(seed);
    Network net;
    net.arch_id = arch_id;
    net.layers.reserve(dims.size() - 1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        const std::size_t in = dims[l];
        const std::size_t out = dims[l + 1];
        layer.weights = Tensor::zeros({out, in});
        layer.bias = Tensor::zeros({out});
        const double limit = std::sqrt(6.0 / static_cast<double>(in));
        for (double& w : layer.weights.data) w = rng.uniform(-limit, limit);
        layer.activation = (l + 2 == dims.size()) ? Activation::identity : Activation::relu;
        net.layers.push_back(std::move(layer));
    }
    return net;
}

// logits[s,o] = sum_i W[o,i] * x[s,i] + b[o], activation applied per layer.
inline ForwardTrace forward_trace(const Network& net, const Tensor& batch) {
    if (net.layers.empty()) throw StateError("forward on a network with no layers");
    if (batch.shape.size() != 2 || batch.cols() != net.input_dim()) {
        throw DimensionError("batch feature dim " + std::to_string(batch.cols()) +
                             " does not match network input dim " +
                             std::to_string(net.input_dim()));
    }
    ForwardTrace trace;
    trace.activations.reserve(net.layers.size() + 1);
    trace.activations.push_back(batch);
    const std::size_t n = batch.rows();
    for (const auto& layer : net.layers) {
        const Tensor& x = trace.activations.back();
        const std::size_t in = layer.in_dim();
        const std::size_t out = layer.out_dim();
        Tensor y = Tensor::zeros({n, out});
        for (std::size_t s = 0; s < n; ++s) {
            const double* xs = x.row(s);
            double* ys = y.row(s);
            for (std::size_t o = 0; o < out; ++o) {
                const double* w = layer.weights.row(o);
                double acc = layer.bias.data[o];
                for (std::size_t i = 0; i < in; ++i) acc += w[i] * xs[i];
                ys[o] = acc;
            }
            if (layer.activation == Activation::relu) {
                for (std::size_t o = 0; o < out; ++o) {
                    if (ys[o] < 0.0) ys[o] = 0.0;
                }
            }
        }
        trace.activations.push_back(std::move(y));
    }
    require_finite(trace.activations.back(), "forward output");
    return trace;
}

inline Tensor forward(const Network& net, const Tensor& batch) {
    return forward_trace(net, batch).activations.back();
}

// Row-wise softmax with max-subtraction.
inline Tensor softmax(const Tensor& logits) {
    Tensor probs = logits;
    const std::size_t n = logits.rows();
    const std::size_t c = logits.cols();
    for (std::size_t s = 0; s < n; ++s) {
        double* row = probs.row(s);
        double mx = row[0];
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (std::size_t j = 0; j < c; ++j) row[j] /= sum;
    }
    return probs;
}

// Backpropagate logit_grad = dL/d(logits) through the trace. The trace must
// come from a forward_trace on this network with the same batch.
inline Gradients backward(const Network& net, const ForwardTrace& trace,
                          const Tensor& logit_grad) {
    if (trace.empty()) {
        throw StateError("backward requires the forward trace for this batch");
    }
    if (trace.activations.size() != net.layers.size() + 1) {
        throw StateError("forward trace does not match network depth");
    }
    require_same_shape(logit_grad, trace.activations.back(), "logit grad");

    const std::size_t n = logit_grad.rows();
    Gradients grads;
    grads.weight_grads.resize(net.layers.size());
    grads.bias_grads.resize(net.layers.size());

    Tensor delta = logit_grad; // dL/dZ for the current layer
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const DenseLayer& layer = net.layers[l];
        const Tensor& x = trace.activations[l]; // layer input
        const std::size_t in = layer.in_dim();
        const std::size_t out = layer.out_dim();

        Tensor dw = Tensor::zeros({out, in});
        Tensor db = Tensor::zeros({out});
        for (std::size_t s = 0; s < n; ++s) {
            const double* ds = delta.row(s);
            const double* xs = x.row(s);
            for (std::size_t o = 0; o < out; ++o) {
                const double g = ds[o];
                if (g == 0.0) continue;
                db.data[o] += g;
                double* dwo = dw.row(o);
                for (std::size_t i = 0; i < in; ++i) dwo[i] += g * xs[i];
            }
        }

        grads.weight_grads[l] = std::move(dw);
        grads.bias_grads[l] = std::move(db);

        if (l > 0) {
            // dL/dX = delta * W, masked by the previous layer's relu.
            Tensor next = Tensor::zeros({n, in});
            for (std::size_t s = 0; s < n; ++s) {
                const double* ds = delta.row(s);
                double* ns = next.row(s);
                for (std::size_t o = 0; o < out; ++o) {
                    const double g = ds[o];
                    if (g == 0.0) continue;
                    const double* w = layer.weights.row(o);
                    for (std::size_t i = 0; i < in; ++i) ns[i] += g * w[i];
                }
            }
            if (net.layers[l - 1].activation == Activation::relu) {
                for (std::size_t k = 0; k < next.data.size(); ++k) {
                    if (x.data[k] <= 0.0) next.data[k] = 0.0;
                }
            }
            delta = std::move(next);
        }
    }
    return grads;
}

// Flat parameter vector in layer order, weights row-major then bias.
// Extraction and re-injection round-trip bit-exactly.
inline std::vector<double> parameter_vector(const Network& net) {
    std::vector<double> params;
    params.reserve(net.param_count());
    for (const auto& l : net.layers) {
        params.insert(params.end(), l.weights.data.begin(), l.weights.data.end());
        params.insert(params.end(), l.bias.data.begin(), l.bias.data.end());
    }
    return params;
}

inline void set_parameter_vector(Network& net, const std::vector<double>& params) {
    if (params.size() != net.param_count()) {
        throw DimensionError("parameter vector length does not match network");
    }
    std::size_t pos = 0;
    for (auto& l : net.layers) {
        std::copy(params.begin() + pos, params.begin() + pos + l.weights.size(),
                  l.weights.data.begin());
        pos += l.weights.size();
        std::copy(params.begin() + pos, params.begin() + pos + l.bias.size(),
                  l.bias.data.begin());
        pos += l.bias.size();
    }
}

} // namespace unlearn
