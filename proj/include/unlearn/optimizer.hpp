#pragma once

#include "unlearn/errors.hpp"
#include "unlearn/network.hpp"

namespace unlearn {

// SGD with classical momentum: v <- m*v + g, theta <- theta - lr*v.
struct OptimizerState {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::vector<Tensor> weight_velocity;
    std::vector<Tensor> bias_velocity;

    static OptimizerState for_network(const Network& net, double lr, double momentum) {
        if (lr <= 0.0) throw ConfigError("learning rate must be positive");
        if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0,1)");
        OptimizerState opt;
        opt.learning_rate = lr;
        opt.momentum = momentum;
        for (const auto& l : net.layers) {
            opt.weight_velocity.push_back(Tensor::zeros(l.weights.shape));
            opt.bias_velocity.push_back(Tensor::zeros(l.bias.shape));
        }
        return opt;
    }
};

inline void sgd_step(Network& net, const Gradients& grads, OptimizerState& opt) {
    if (grads.weight_grads.size() != net.layers.size() ||
        opt.weight_velocity.size() != net.layers.size()) {
        throw DimensionError("gradient/velocity layer count does not match network");
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& layer = net.layers[l];
        const Tensor& gw = grads.weight_grads[l];
        const Tensor& gb = grads.bias_grads[l];
        require_same_shape(gw, layer.weights, "weight grad");
        require_same_shape(gb, layer.bias, "bias grad");
        if (!gw.all_finite() || !gb.all_finite()) {
            throw NumericError("non-finite gradient in layer " + std::to_string(l));
        }
        Tensor& vw = opt.weight_velocity[l];
        Tensor& vb = opt.bias_velocity[l];
        for (std::size_t k = 0; k < gw.size(); ++k) {
            vw.data[k] = opt.momentum * vw.data[k] + gw.data[k];
            layer.weights.data[k] -= opt.learning_rate * vw.data[k];
        }
        for (std::size_t k = 0; k < gb.size(); ++k) {
            vb.data[k] = opt.momentum * vb.data[k] + gb.data[k];
            layer.bias.data[k] -= opt.learning_rate * vb.data[k];
        }
    }
}

} // namespace unlearn
