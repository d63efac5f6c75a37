#pragma once

#include <chrono>
#include <future>
#include <string>
#include <vector>

#include "unlearn/attacks.hpp"
#include "unlearn/unlearn.hpp"

namespace unlearn {

// speedup = retrain / (reference training + unlearn loop).
inline double timing_compare(double retrain_seconds, double reference_seconds,
                             double unlearn_seconds) {
    if (retrain_seconds <= 0.0) throw InputError("retrain time must be positive");
    if (reference_seconds < 0.0 || unlearn_seconds < 0.0) {
        throw InputError("phase times must be nonnegative");
    }
    return retrain_seconds / (reference_seconds + unlearn_seconds);
}

struct LambdaSweepRow {
    double lambda = 0.0;
    double test_accuracy = 0.0;
    double backdoor_success = 0.0;
    double tradeoff_score = 0.0; // 0.5/0.5 blend, min-max normalized over the grid
};

// One unlearning run per lambda against a fixed initial/reference pair.
// The trade-off score weighs post-unlearn accuracy and attack failure
// equally after min-max normalization over the grid.
inline std::vector<LambdaSweepRow> lambda_sweep(const Network& initial, const Network& reference,
                                                const DatasetBundle& bundle,
                                                const LabeledDataset& test_set,
                                                const TriggerSpec& trigger,
                                                const std::vector<double>& lambdas,
                                                const UnlearnConfig& base_cfg, int jobs = 1) {
    if (lambdas.empty()) throw ConfigError("lambda grid is empty");
    for (double l : lambdas) {
        if (l <= 0.0 || l > 1.0) throw ConfigError("lambda grid value outside (0,1]");
    }

    const auto run_cell = [&](double lambda) {
        UnlearnConfig cfg = base_cfg;
        cfg.lambda = lambda;
        const UnlearnResult res = unlearn(initial, reference, bundle, cfg);
        LambdaSweepRow row;
        row.lambda = lambda;
        row.test_accuracy = accuracy(res.model, test_set).accuracy;
        row.backdoor_success = backdoor_success_rate(res.model, test_set, trigger);
        return row;
    };

    std::vector<LambdaSweepRow> rows(lambdas.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < lambdas.size(); ++i) rows[i] = run_cell(lambdas[i]);
    } else {
        std::vector<std::future<LambdaSweepRow>> futures;
        for (double l : lambdas) {
            futures.push_back(std::async(std::launch::async, run_cell, l));
        }
        for (std::size_t i = 0; i < futures.size(); ++i) rows[i] = futures[i].get();
    }

    double acc_lo = rows[0].test_accuracy, acc_hi = rows[0].test_accuracy;
    double fail_lo = 1.0 - rows[0].backdoor_success, fail_hi = fail_lo;
    for (const auto& r : rows) {
        acc_lo = std::min(acc_lo, r.test_accuracy);
        acc_hi = std::max(acc_hi, r.test_accuracy);
        fail_lo = std::min(fail_lo, 1.0 - r.backdoor_success);
        fail_hi = std::max(fail_hi, 1.0 - r.backdoor_success);
    }
    const auto norm = [](double v, double lo, double hi) {
        return hi > lo ? (v - lo) / (hi - lo) : 1.0;
    };
    for (auto& r : rows) {
        r.tradeoff_score = 0.5 * norm(r.test_accuracy, acc_lo, acc_hi) +
                           0.5 * norm(1.0 - r.backdoor_success, fail_lo, fail_hi);
    }
    return rows;
}

struct RefsizeSweepRow {
    std::size_t reference_size = 0;
    double reference_test_accuracy = 0.0;
    double unlearn_test_accuracy = 0.0;
    double membership_attack_accuracy = 0.0;
    double reference_train_seconds = 0.0;
};

// Re-draws a reference subset of each size from the remainder, retrains the
// reference model, unlearns, and audits membership on the forget set.
inline std::vector<RefsizeSweepRow> refsize_sweep(const Network& initial,
                                                  const DatasetBundle& bundle,
                                                  const LabeledDataset& test_set,
                                                  const AttackModel& attack,
                                                  const std::vector<std::size_t>& sizes,
                                                  const UnlearnConfig& base_cfg,
                                                  const TrainParams& reference_params,
                                                  int jobs = 1) {
    if (sizes.empty()) throw ConfigError("reference size grid is empty");
    for (std::size_t size : sizes) {
        if (size < 1 || size > bundle.remain.size()) {
            throw ConfigError("reference size " + std::to_string(size) +
                              " exceeds the remaining data");
        }
    }

    const auto run_cell = [&](std::size_t size) {
        Rng rng(derive_seed(base_cfg.seed, "refsize-" + std::to_string(size)));
        auto order = shuffled_indices(bundle.remain.size(), rng);
        order.resize(size);
        DatasetBundle cell_bundle = bundle;
        cell_bundle.reference_idx.clear();
        for (std::size_t local : order) cell_bundle.reference_idx.push_back(bundle.remain_idx[local]);
        std::sort(cell_bundle.reference_idx.begin(), cell_bundle.reference_idx.end());
        cell_bundle.reference_subset = subset(bundle.full, cell_bundle.reference_idx, "reference");

        RefsizeSweepRow row;
        row.reference_size = size;
        const auto t0 = std::chrono::steady_clock::now();
        const Network reference =
            train_reference(cell_bundle.reference_subset, initial.arch_id, reference_params);
        row.reference_train_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.reference_test_accuracy = accuracy(reference, test_set).accuracy;

        const UnlearnResult res = unlearn(initial, reference, cell_bundle, base_cfg);
        row.unlearn_test_accuracy = accuracy(res.model, test_set).accuracy;
        const std::vector<int> truth(cell_bundle.forget.size(), 1);
        row.membership_attack_accuracy =
            membership_attack(attack, res.model, cell_bundle.forget, truth).attack_accuracy;
        return row;
    };

    std::vector<RefsizeSweepRow> rows(sizes.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < sizes.size(); ++i) rows[i] = run_cell(sizes[i]);
    } else {
        std::vector<std::future<RefsizeSweepRow>> futures;
        for (std::size_t size : sizes) {
            futures.push_back(std::async(std::launch::async, run_cell, size));
        }
        for (std::size_t i = 0; i < futures.size(); ++i) rows[i] = futures[i].get();
    }
    return rows;
}

} // namespace unlearn
