#pragma once

#include <array>
#include <cmath>

#include "unlearn/dataset.hpp"
#include "unlearn/losses.hpp"

namespace unlearn {

// Normalized 50-bin histogram over [0,1] of the per-sample max-class
// posterior. Counts sum to 1 within 1e-9.
struct PosteriorHistogram {
    static constexpr std::size_t kBins = 50;
    std::array<double, kBins> density{};

    static double bin_lo(std::size_t b) { return static_cast<double>(b) / kBins; }
    static double bin_hi(std::size_t b) { return static_cast<double>(b + 1) / kBins; }
};

inline PosteriorHistogram histogram_of_values(const std::vector<double>& values) {
    if (values.empty()) throw InputError("histogram of an empty value set");
    PosteriorHistogram h;
    for (double v : values) {
        auto b = static_cast<long long>(std::floor(v * static_cast<double>(PosteriorHistogram::kBins)));
        if (b < 0) b = 0;
        if (b >= static_cast<long long>(PosteriorHistogram::kBins)) {
            b = PosteriorHistogram::kBins - 1;
        }
        h.density[static_cast<std::size_t>(b)] += 1.0;
    }
    for (double& d : h.density) d /= static_cast<double>(values.size());
    return h;
}

// Max-class posterior per sample. The sigmoid transform mirrors a plotting
// convention for non-normalized outputs; it never feeds training.
inline std::vector<double> max_posteriors(const Network& net, const LabeledDataset& data,
                                          bool sigmoid_transform = false) {
    if (data.size() == 0) throw InputError("max_posteriors on an empty dataset");
    std::vector<double> out(data.size());
    if (sigmoid_transform) {
        const Tensor logits = forward(net, data.features);
        for (std::size_t s = 0; s < logits.rows(); ++s) {
            double best = logits.row(s)[0];
            for (std::size_t j = 1; j < logits.cols(); ++j) best = std::max(best, logits.row(s)[j]);
            out[s] = 1.0 / (1.0 + std::exp(-best));
        }
        return out;
    }
    const PosteriorMatrix p = posterior(net, data.features, ModelTag::target);
    for (std::size_t s = 0; s < p.rows(); ++s) {
        double best = p.probs.row(s)[0];
        for (std::size_t j = 1; j < p.cols(); ++j) best = std::max(best, p.probs.row(s)[j]);
        out[s] = best;
    }
    return out;
}

inline PosteriorHistogram posterior_histogram(const Network& net, const LabeledDataset& data,
                                              bool sigmoid_transform = false) {
    return histogram_of_values(max_posteriors(net, data, sigmoid_transform));
}

// Discrete KL(q || q_prime) between histograms with 1e-9 smoothing on every
// bin before renormalizing.
inline double histogram_kl(const PosteriorHistogram& q, const PosteriorHistogram& q_prime) {
    constexpr double kSmooth = 1e-9;
    double qs = 0.0, ps = 0.0;
    for (std::size_t b = 0; b < PosteriorHistogram::kBins; ++b) {
        qs += q.density[b] + kSmooth;
        ps += q_prime.density[b] + kSmooth;
    }
    double kl = 0.0;
    for (std::size_t b = 0; b < PosteriorHistogram::kBins; ++b) {
        const double a = (q.density[b] + kSmooth) / qs;
        const double c = (q_prime.density[b] + kSmooth) / ps;
        kl += a * std::log(a / c);
    }
    return kl;
}

} // namespace unlearn
