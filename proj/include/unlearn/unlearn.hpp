#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/histogram.hpp"
#include "unlearn/losses.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/train.hpp"

namespace unlearn {

// Pool the accuracy-penalty batches are drawn from. The reference subset
// keeps per-step cost proportional to the reference set.
enum class CePool { reference_subset, remain };

struct UnlearnConfig {
    double lambda = 0.01;      // forgetting term weight, (0,1]
    int max_iterations = 50;   // full passes over the forget set
    double learning_rate = 0.01;
    double momentum = 0.9;
    int forget_batch = 32;
    int remain_batch = 32;
    double stop_kl = 1e-3;     // early stop once mean KL over the forget set drops below
    std::uint64_t seed = 0;
    CePool ce_pool = CePool::reference_subset;

    void validate() const {
        if (lambda <= 0.0 || lambda > 1.0) throw ConfigError("lambda must lie in (0,1]");
        if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
        if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
        if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0,1)");
        if (forget_batch < 1 || remain_batch < 1) throw ConfigError("batch sizes must be >= 1");
        if (stop_kl < 0.0) throw ConfigError("stop_kl must be >= 0");
    }
};

// Row t records the state entering iteration t (so the last row is the
// final model). Losses are means over the forget set / CE pool.
struct UnlearnTraceRow {
    int iteration = 0;
    double kl = 0.0;
    double ce = 0.0;
    double loss = 0.0;
    double forget_accuracy = 0.0;
    double remain_accuracy = 0.0;
    double seconds = 0.0;
};

struct UnlearnTrace {
    std::vector<UnlearnTraceRow> rows;
    bool stopped_early = false;
};

inline void write_trace_csv(const UnlearnTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << "iteration,kl,ce,loss,forget_acc,remain_acc,seconds\n";
    out.precision(17);
    for (const auto& r : trace.rows) {
        out << r.iteration << ',' << r.kl << ',' << r.ce << ',' << r.loss << ','
            << r.forget_accuracy << ',' << r.remain_accuracy << ',' << r.seconds << '\n';
    }
}

struct UnlearnResult {
    Network model;
    UnlearnTrace trace;
};

// Thrown when a loss or gradient turns non-finite mid-run; carries the
// trace accumulated up to the failure.
class UnlearnNumericError : public NumericError {
public:
    UnlearnNumericError(const std::string& msg, UnlearnTrace trace)
        : NumericError(msg), trace(std::move(trace)) {}
    UnlearnTrace trace;
};

// Observer over the accuracy-penalty batches; receives indices into the
// full dataset. Used to audit that no forget-set sample ever enters one.
using CeBatchObserver = std::function<void(const std::vector<std::size_t>&)>;

namespace detail {

inline double mean_forget_kl(const Network& net, const Tensor& forget_features,
                             const PosteriorMatrix& reference_probs) {
    const PosteriorMatrix current = posterior(net, forget_features, ModelTag::target);
    return kl_loss(reference_probs, current);
}

} // namespace detail

// Iteratively perturbs `initial` toward the reference model's posteriors on
// the forget set while a cross-entropy term on held data anchors accuracy.
// Each iteration is one full pass over the forget set in minibatches; every
// step additionally draws a fresh batch from the CE pool. The reference
// model's posteriors over the forget set are computed once and stay fixed.
inline UnlearnResult unlearn(const Network& initial, const Network& reference,
                             const DatasetBundle& bundle, const UnlearnConfig& cfg,
                             const CeBatchObserver& on_ce_batch = {}) {
    cfg.validate();
    if (bundle.forget.size() == 0) throw ConfigError("forget set is empty");
    if (initial.output_dim() != reference.output_dim()) {
        throw DimensionError("initial and reference models disagree on class count");
    }
    const LabeledDataset& ce_pool =
        (cfg.ce_pool == CePool::reference_subset) ? bundle.reference_subset : bundle.remain;
    const std::vector<std::size_t>& ce_pool_idx =
        (cfg.ce_pool == CePool::reference_subset) ? bundle.reference_idx : bundle.remain_idx;
    if (ce_pool.size() == 0) throw ConfigError("accuracy-penalty pool is empty");

    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    const PosteriorMatrix reference_probs =
        posterior(reference, bundle.forget.features, ModelTag::reference);

    Network net = initial;
    auto opt = OptimizerState::for_network(net, cfg.learning_rate, cfg.momentum);
    Rng rng(derive_seed(cfg.seed, "unlearn-loop"));

    const std::size_t n_forget = bundle.forget.size();
    const auto forget_batch = static_cast<std::size_t>(cfg.forget_batch);
    const auto remain_batch = static_cast<std::size_t>(cfg.remain_batch);
    std::vector<std::size_t> forget_order(n_forget);
    for (std::size_t i = 0; i < n_forget; ++i) forget_order[i] = i;

    UnlearnTrace trace;
    const auto record = [&](int iteration, double kl) {
        UnlearnTraceRow row;
        row.iteration = iteration;
        row.kl = kl;
        const PosteriorMatrix pool_probs = posterior(net, ce_pool.features, ModelTag::target);
        row.ce = ce_loss(pool_probs, ce_pool.labels);
        row.loss = combined_loss(cfg.lambda, row.kl, row.ce);
        row.forget_accuracy = accuracy(net, bundle.forget).accuracy;
        row.remain_accuracy = accuracy(net, ce_pool).accuracy;
        row.seconds = elapsed();
        trace.rows.push_back(row);
    };

    try {
    for (int t = 1;; ++t) {
        const double kl_now = detail::mean_forget_kl(net, bundle.forget.features, reference_probs);
        if (!std::isfinite(kl_now)) {
            throw NumericError("mean KL over the forget set is non-finite");
        }
        record(t, kl_now);
        if (kl_now <= cfg.stop_kl) {
            trace.stopped_early = true;
            break;
        }
        if (t > cfg.max_iterations) break;

        rng.shuffle(forget_order);
        for (std::size_t start = 0; start < n_forget; start += forget_batch) {
            const std::size_t stop = std::min(n_forget, start + forget_batch);

            // Forgetting term on the forget minibatch, reference rows frozen.
            Tensor fx = detail::gather_rows(bundle.forget.features, forget_order, start, stop);
            Tensor fref = Tensor::zeros({stop - start, reference_probs.cols()});
            for (std::size_t i = start; i < stop; ++i) {
                std::copy(reference_probs.probs.row(forget_order[i]),
                          reference_probs.probs.row(forget_order[i]) + reference_probs.cols(),
                          fref.row(i - start));
            }
            ForwardTrace ftrace = forward_trace(net, fx);
            PosteriorMatrix fprobs{softmax(ftrace.activations.back()), ModelTag::target};
            Tensor fgrad = kl_logit_grad(PosteriorMatrix{std::move(fref), ModelTag::reference}, fprobs);
            for (double& g : fgrad.data) g *= cfg.lambda;
            Gradients grads = backward(net, ftrace, fgrad);

            // Accuracy penalty on a fresh batch from the CE pool.
            std::vector<std::size_t> ce_local(remain_batch);
            for (auto& ix : ce_local) ix = rng.below(ce_pool.size());
            if (on_ce_batch) {
                std::vector<std::size_t> full_idx(ce_local.size());
                for (std::size_t i = 0; i < ce_local.size(); ++i) {
                    full_idx[i] = ce_pool_idx[ce_local[i]];
                }
                on_ce_batch(full_idx);
            }
            Tensor cx = detail::gather_rows(ce_pool.features, ce_local, 0, ce_local.size());
            std::vector<int> cy(ce_local.size());
            for (std::size_t i = 0; i < ce_local.size(); ++i) cy[i] = ce_pool.labels[ce_local[i]];
            ForwardTrace ctrace = forward_trace(net, cx);
            PosteriorMatrix cprobs{softmax(ctrace.activations.back()), ModelTag::target};
            Tensor cgrad = ce_logit_grad(cprobs, cy);
            for (double& g : cgrad.data) g *= (1.0 - cfg.lambda);
            Gradients cgrads = backward(net, ctrace, cgrad);

            for (std::size_t l = 0; l < grads.weight_grads.size(); ++l) {
                for (std::size_t k = 0; k < grads.weight_grads[l].size(); ++k) {
                    grads.weight_grads[l].data[k] += cgrads.weight_grads[l].data[k];
                }
                for (std::size_t k = 0; k < grads.bias_grads[l].size(); ++k) {
                    grads.bias_grads[l].data[k] += cgrads.bias_grads[l].data[k];
                }
            }
            sgd_step(net, grads, opt);
        }
    }
    } catch (const NumericError& e) {
        throw UnlearnNumericError(e.what(), trace);
    }

    return UnlearnResult{std::move(net), std::move(trace)};
}

// Trains the guidance model on the reference subset only; it never sees the
// forget set.
inline Network train_reference(const LabeledDataset& reference_subset, const std::string& arch_id,
                               const TrainParams& params) {
    if (reference_subset.size() == 0) {
        throw ConfigError("reference subset is empty");
    }
    return train_classifier(reference_subset, arch_id, params);
}

// Compares max-posterior histograms of a candidate reference against an
// actual retrain baseline over a probe set; returns the histogram KL with
// the retrain model as Q. Near zero means the candidate is a valid stand-in.
inline double verify_reference(const Network& candidate, const Network& retrain_model,
                               const LabeledDataset& probe) {
    if (probe.size() == 0) throw InputError("verify_reference needs a nonempty probe");
    if (candidate.output_dim() != retrain_model.output_dim()) {
        throw DimensionError("models disagree on class count");
    }
    const PosteriorHistogram q = posterior_histogram(retrain_model, probe);
    const PosteriorHistogram q_prime = posterior_histogram(candidate, probe);
    return histogram_kl(q, q_prime);
}

struct RetrainResult {
    Network model;
    double seconds = 0.0;
};

// From-scratch training on the remainder; the gold standard the unlearning
// run is compared against.
inline RetrainResult retrain_baseline(const DatasetBundle& bundle, const std::string& arch_id,
                                      const TrainParams& params) {
    if (bundle.remain.size() == 0) throw ConfigError("remain set is empty");
    const auto t0 = std::chrono::steady_clock::now();
    Network net = train_classifier(bundle.remain, arch_id, params);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return RetrainResult{std::move(net), secs};
}

} // namespace unlearn
