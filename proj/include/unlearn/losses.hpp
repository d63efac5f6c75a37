#pragma once

#include <cmath>
#include <vector>

#include "unlearn/errors.hpp"
#include "unlearn/network.hpp"
#include "unlearn/tensor.hpp"

namespace unlearn {

// Every probability entering a log is clamped below at this value.
inline constexpr double kLogClamp = 1e-12;

enum class ModelTag { target, reference, retrain };

// Per-sample class-probability rows. Rows sum to 1 within 1e-9.
struct PosteriorMatrix {
    Tensor probs;
    ModelTag tag = ModelTag::target;

    std::size_t rows() const { return probs.rows(); }
    std::size_t cols() const { return probs.cols(); }

    void validate() const {
        for (std::size_t s = 0; s < probs.rows(); ++s) {
            double sum = 0.0;
            for (std::size_t j = 0; j < probs.cols(); ++j) {
                const double p = probs.at(s, j);
                if (p < 0.0 || p > 1.0) throw InputError("posterior entry outside [0,1]");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                throw InputError("posterior row does not sum to 1");
            }
        }
    }
};

inline PosteriorMatrix posterior(const Network& net, const Tensor& features, ModelTag tag) {
    return PosteriorMatrix{softmax(forward(net, features)), tag};
}

// Batch-mean KL divergence KL(reference || target):
//   mean_rows sum_j p_j * (log p_j - log q_j), logs clamped at 1e-12.
inline double kl_loss(const PosteriorMatrix& reference, const PosteriorMatrix& target) {
    require_same_shape(reference.probs, target.probs, "kl_loss");
    reference.validate();
    const std::size_t n = reference.rows();
    if (n == 0) throw InputError("kl_loss on an empty batch");
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const double* p = reference.probs.row(s);
        const double* q = target.probs.row(s);
        for (std::size_t j = 0; j < reference.cols(); ++j) {
            if (p[j] <= 0.0) continue;
            total += p[j] * (std::log(std::max(p[j], kLogClamp)) -
                             std::log(std::max(q[j], kLogClamp)));
        }
    }
    return total / static_cast<double>(n);
}

// Batch-mean categorical cross-entropy -log q[true class].
inline double ce_loss(const PosteriorMatrix& predicted, const std::vector<int>& labels) {
    const std::size_t n = predicted.rows();
    if (n == 0) throw InputError("ce_loss on an empty batch");
    if (labels.size() != n) throw DimensionError("ce_loss label count mismatch");
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const int y = labels[s];
        if (y < 0 || static_cast<std::size_t>(y) >= predicted.cols()) {
            throw InputError("ce_loss label out of class range");
        }
        total -= std::log(std::max(predicted.probs.at(s, static_cast<std::size_t>(y)), kLogClamp));
    }
    return total / static_cast<double>(n);
}

// lambda * kl + (1 - lambda) * ce, lambda in (0,1].
inline double combined_loss(double lambda, double kl, double ce) {
    if (lambda <= 0.0 || lambda > 1.0) throw ConfigError("lambda must lie in (0,1]");
    return lambda * kl + (1.0 - lambda) * ce;
}

// d(kl_loss)/d(logits) with the reference frozen: (q - p) / n.
inline Tensor kl_logit_grad(const PosteriorMatrix& reference, const PosteriorMatrix& target) {
    require_same_shape(reference.probs, target.probs, "kl grad");
    Tensor grad = target.probs;
    const double scale = 1.0 / static_cast<double>(grad.rows());
    for (std::size_t k = 0; k < grad.data.size(); ++k) {
        grad.data[k] = (grad.data[k] - reference.probs.data[k]) * scale;
    }
    return grad;
}

// d(ce_loss)/d(logits): (q - onehot(y)) / n.
inline Tensor ce_logit_grad(const PosteriorMatrix& predicted, const std::vector<int>& labels) {
    Tensor grad = predicted.probs;
    const std::size_t n = grad.rows();
    if (labels.size() != n) throw DimensionError("ce grad label count mismatch");
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        grad.at(s, static_cast<std::size_t>(labels[s])) -= 1.0;
    }
    for (double& g : grad.data) g *= scale;
    return grad;
}

} // namespace unlearn
