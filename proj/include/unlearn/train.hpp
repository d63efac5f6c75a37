#pragma once

#include <cstdint>
#include <string>

#include "unlearn/dataset.hpp"
#include "unlearn/losses.hpp"
#include "unlearn/optimizer.hpp"

namespace unlearn {

struct TrainParams {
    int epochs = 50;
    double learning_rate = 0.05;
    double momentum = 0.9;
    int batch_size = 32;
    std::uint64_t seed = 0;
};

namespace detail {

inline Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& idx,
                          std::size_t begin, std::size_t end) {
    Tensor out = Tensor::zeros({end - begin, src.cols()});
    for (std::size_t i = begin; i < end; ++i) {
        std::copy(src.row(idx[i]), src.row(idx[i]) + src.cols(), out.row(i - begin));
    }
    return out;
}

} // namespace detail

// Minibatch SGD with cross-entropy, seeded shuffle each epoch. Continues
// from the given network.
inline Network train_classifier(Network net, const LabeledDataset& data, const TrainParams& p) {
    if (data.size() == 0) throw ConfigError("cannot train on an empty dataset");
    if (p.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (p.batch_size < 1) throw ConfigError("batch size must be >= 1");
    auto opt = OptimizerState::for_network(net, p.learning_rate, p.momentum);
    Rng rng(derive_seed(p.seed, "epoch-shuffle"));
    const std::size_t n = data.size();
    const auto batch = static_cast<std::size_t>(p.batch_size);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (int epoch = 0; epoch < p.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            Tensor x = detail::gather_rows(data.features, order, start, stop);
            std::vector<int> y(stop - start);
            for (std::size_t i = start; i < stop; ++i) y[i - start] = data.labels[order[i]];
            ForwardTrace trace = forward_trace(net, x);
            PosteriorMatrix probs{softmax(trace.activations.back()), ModelTag::target};
            Tensor logit_grad = ce_logit_grad(probs, y);
            Gradients grads = backward(net, trace, logit_grad);
            sgd_step(net, grads, opt);
        }
    }
    return net;
}

// Fresh network trained from a seeded init.
inline Network train_classifier(const LabeledDataset& data, const std::string& arch_id,
                                const TrainParams& p) {
    Network net = init_network(arch_id, derive_seed(p.seed, "init"));
    if (net.input_dim() != data.dim()) {
        throw DimensionError("arch input dim does not match dataset feature dim");
    }
    return train_classifier(std::move(net), data, p);
}

} // namespace unlearn
