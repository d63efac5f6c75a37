#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/losses.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/train.hpp"

namespace unlearn {

// A fixed input patch paired with a fixed target label.
struct TriggerSpec {
    std::vector<std::size_t> patch_coords;
    double patch_value = 1.0;
    int target_label = 0;
};

// Bottom-right `patch x patch` block of a rows x cols image.
inline TriggerSpec square_patch_trigger(std::size_t image_rows, std::size_t image_cols,
                                        int target_label, std::size_t patch = 3,
                                        double value = 1.0) {
    if (patch > image_rows || patch > image_cols) {
        throw InputError("trigger patch larger than the image");
    }
    TriggerSpec spec;
    spec.patch_value = value;
    spec.target_label = target_label;
    for (std::size_t r = image_rows - patch; r < image_rows; ++r) {
        for (std::size_t c = image_cols - patch; c < image_cols; ++c) {
            spec.patch_coords.push_back(r * image_cols + c);
        }
    }
    return spec;
}

// Copy of `data` with patch coordinates set to the patch value and every
// label replaced by the target label. The input is never mutated.
inline LabeledDataset implant_trigger(const LabeledDataset& data, const TriggerSpec& spec) {
    for (std::size_t coord : spec.patch_coords) {
        if (coord >= data.dim()) {
            throw InputError("trigger coordinate " + std::to_string(coord) +
                             " outside feature dim " + std::to_string(data.dim()));
        }
    }
    if (spec.target_label < 0 || spec.target_label >= data.class_count) {
        throw InputError("trigger target label outside class range");
    }
    LabeledDataset out = data;
    out.source_id += "/triggered";
    for (std::size_t s = 0; s < out.size(); ++s) {
        double* row = out.features.row(s);
        for (std::size_t coord : spec.patch_coords) row[coord] = spec.patch_value;
        out.labels[s] = spec.target_label;
    }
    return out;
}

// Trains on poisoned-forget plus clean-remain; the backdoored model the
// unlearning run starts from.
inline Network backdoor_train(const DatasetBundle& bundle, const TriggerSpec& spec,
                              const std::string& arch_id, const TrainParams& params) {
    const LabeledDataset poisoned = implant_trigger(bundle.forget, spec);
    LabeledDataset train_set;
    train_set.class_count = bundle.full.class_count;
    train_set.source_id = bundle.full.source_id + "/backdoored";
    const std::size_t n = poisoned.size() + bundle.remain.size();
    train_set.features = Tensor::zeros({n, bundle.full.dim()});
    train_set.labels.resize(n);
    std::copy(poisoned.features.data.begin(), poisoned.features.data.end(),
              train_set.features.data.begin());
    std::copy(bundle.remain.features.data.begin(), bundle.remain.features.data.end(),
              train_set.features.data.begin() + poisoned.features.size());
    std::copy(poisoned.labels.begin(), poisoned.labels.end(), train_set.labels.begin());
    std::copy(bundle.remain.labels.begin(), bundle.remain.labels.end(),
              train_set.labels.begin() + poisoned.size());
    return train_classifier(train_set, arch_id, params);
}

// Fraction of probe samples the model routes to the trigger's target label
// once the patch is implanted.
inline double backdoor_success_rate(const Network& net, const LabeledDataset& probe,
                                    const TriggerSpec& spec) {
    if (probe.size() == 0) throw InputError("backdoor_success_rate needs a nonempty probe");
    const LabeledDataset triggered = implant_trigger(probe, spec);
    const auto predicted = predict(net, triggered.features);
    std::size_t hits = 0;
    for (int y : predicted) {
        if (y == spec.target_label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(probe.size());
}

struct ShadowConfig {
    int n_shadow = 1;
    LabeledDataset shadow_data; // disjoint from the target model's training data
    double in_fraction = 0.5;
    int attack_feature_k = 3;
    std::uint64_t seed = 0;
};

// Sorted top-k posterior entries for one probability row.
inline std::vector<double> topk_features(const double* probs, std::size_t c, int k) {
    std::vector<double> sorted(probs, probs + c);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    sorted.resize(static_cast<std::size_t>(k), 0.0);
    return sorted;
}

// Labeled member/non-member posterior features from shadow models trained
// on their own in-splits. Returned as a 2-class dataset (1 = member).
inline LabeledDataset build_shadow_corpus(const ShadowConfig& cfg, const std::string& arch_id,
                                          const TrainParams& params) {
    if (cfg.n_shadow < 1) throw ConfigError("n_shadow must be >= 1");
    if (cfg.attack_feature_k < 1 ||
        static_cast<std::size_t>(cfg.attack_feature_k) >
            static_cast<std::size_t>(cfg.shadow_data.class_count)) {
        throw ConfigError("attack_feature_k must lie in [1, class_count]");
    }
    const std::size_t n = cfg.shadow_data.size();
    const auto in_n = static_cast<std::size_t>(cfg.in_fraction * static_cast<double>(n));
    if (in_n < 1 || in_n >= n) {
        throw ConfigError("shadow data too small for the requested in/out split");
    }

    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    for (int m = 0; m < cfg.n_shadow; ++m) {
        Rng rng(derive_seed(cfg.seed, "shadow-split-" + std::to_string(m)));
        auto order = shuffled_indices(n, rng);
        std::vector<std::size_t> in_idx(order.begin(), order.begin() + in_n);
        std::vector<std::size_t> out_idx(order.begin() + in_n, order.end());
        const std::size_t per_side = std::min(in_idx.size(), out_idx.size());
        in_idx.resize(per_side);
        out_idx.resize(per_side);

        const LabeledDataset in_set = subset(cfg.shadow_data, in_idx, "shadow-in");
        TrainParams shadow_params = params;
        shadow_params.seed = derive_seed(cfg.seed, "shadow-train-" + std::to_string(m));
        const Network shadow = train_classifier(in_set, arch_id, shadow_params);

        const auto emit = [&](const std::vector<std::size_t>& idx, int member) {
            const LabeledDataset probe = subset(cfg.shadow_data, idx, "shadow-probe");
            const PosteriorMatrix probs = posterior(shadow, probe.features, ModelTag::target);
            for (std::size_t s = 0; s < probs.rows(); ++s) {
                features.push_back(topk_features(probs.probs.row(s), probs.cols(),
                                                 cfg.attack_feature_k));
                labels.push_back(member);
            }
        };
        emit(in_idx, 1);
        emit(out_idx, 0);
    }

    LabeledDataset corpus;
    corpus.class_count = 2;
    corpus.source_id = cfg.shadow_data.source_id + "/shadow-corpus";
    corpus.features = Tensor::zeros({features.size(), static_cast<std::size_t>(cfg.attack_feature_k)});
    corpus.labels = std::move(labels);
    for (std::size_t i = 0; i < features.size(); ++i) {
        std::copy(features[i].begin(), features[i].end(), corpus.features.row(i));
    }
    return corpus;
}

// Binary member/non-member classifier over sorted top-k posteriors.
struct AttackModel {
    Network net;
    double validation_accuracy = 0.0;
    int feature_k = 3;
};

struct AttackTrainParams {
    int epochs = 400;
    double learning_rate = 0.5;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    std::size_t hidden_width = 16;
};

// Full-batch gradient descent over multiplicity-weighted unique rows in a
// canonical sort order. Weights are count/N of exact integers, so training
// is bit-identical under any whole-corpus duplication. The held-out
// validation split is chosen by feature-content hash, which keeps duplicate
// rows on one side.
inline AttackModel train_attack_model(const LabeledDataset& corpus,
                                      const AttackTrainParams& params = {}) {
    if (corpus.class_count != 2) throw ConfigError("attack corpus must be 2-class");
    bool seen[2] = {false, false};
    for (int y : corpus.labels) seen[y] = true;
    if (!seen[0] || !seen[1]) {
        throw ConfigError("attack corpus must contain both member and non-member rows");
    }

    const std::size_t k = corpus.dim();
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        std::uint64_t h = fnv1a(corpus.features.row(i), k * sizeof(double),
                                derive_seed(params.seed, "attack-val-split"));
        if (h % 4 == 0) {
            val_idx.push_back(i);
        } else {
            train_idx.push_back(i);
        }
    }
    if (train_idx.empty()) throw ConfigError("attack corpus too small to train on");

    std::map<std::pair<std::vector<double>, int>, std::size_t> unique_rows;
    for (std::size_t i : train_idx) {
        std::vector<double> row(corpus.features.row(i), corpus.features.row(i) + k);
        unique_rows[{std::move(row), corpus.labels[i]}] += 1;
    }
    const std::size_t u = unique_rows.size();
    const auto total = static_cast<double>(train_idx.size());
    Tensor x = Tensor::zeros({u, k});
    std::vector<int> y(u);
    std::vector<double> weight(u);
    std::size_t r = 0;
    for (const auto& [key, count] : unique_rows) {
        std::copy(key.first.begin(), key.first.end(), x.row(r));
        y[r] = key.second;
        weight[r] = static_cast<double>(count) / total;
        ++r;
    }

    const std::string arch = std::to_string(k) + "-" + std::to_string(params.hidden_width) + "-2";
    Network net = init_network(arch, derive_seed(params.seed, "attack-init"));
    auto opt = OptimizerState::for_network(net, params.learning_rate, params.momentum);
    for (int e = 0; e < params.epochs; ++e) {
        ForwardTrace trace = forward_trace(net, x);
        Tensor grad = softmax(trace.activations.back());
        for (std::size_t i = 0; i < u; ++i) {
            grad.at(i, static_cast<std::size_t>(y[i])) -= 1.0;
            grad.at(i, 0) *= weight[i];
            grad.at(i, 1) *= weight[i];
        }
        Gradients grads = backward(net, trace, grad);
        sgd_step(net, grads, opt);
    }

    AttackModel model;
    model.feature_k = static_cast<int>(k);
    model.validation_accuracy =
        val_idx.empty() ? 0.0 : accuracy(net, subset(corpus, val_idx, "attack-val")).accuracy;
    model.net = std::move(net);
    return model;
}

struct MembershipReport {
    std::vector<double> member_probability;
    double attack_accuracy = 0.0;
    std::size_t member_count = 0;
    std::size_t nonmember_count = 0;
};

// Runs the attack over the target model's posteriors on the probe. For the
// unlearning audit the probe is the forget set with all-member truth, so the
// reported accuracy is the fraction still recognized as training members.
inline MembershipReport membership_attack(const AttackModel& attack, const Network& target,
                                          const LabeledDataset& probe,
                                          const std::vector<int>& truth) {
    if (probe.size() == 0) throw InputError("membership_attack needs a nonempty probe");
    if (truth.size() != probe.size()) throw DimensionError("truth labels do not match probe size");
    const PosteriorMatrix probs = posterior(target, probe.features, ModelTag::target);
    Tensor attack_in = Tensor::zeros({probe.size(), static_cast<std::size_t>(attack.feature_k)});
    for (std::size_t s = 0; s < probe.size(); ++s) {
        const auto feats = topk_features(probs.probs.row(s), probs.cols(), attack.feature_k);
        std::copy(feats.begin(), feats.end(), attack_in.row(s));
    }
    const PosteriorMatrix verdicts = posterior(attack.net, attack_in, ModelTag::target);

    MembershipReport report;
    report.member_probability.resize(probe.size());
    std::size_t correct = 0;
    for (std::size_t s = 0; s < probe.size(); ++s) {
        const double p_member = verdicts.probs.at(s, 1);
        report.member_probability[s] = p_member;
        const int call = p_member > 0.5 ? 1 : 0;
        if (truth[s] == 1) {
            ++report.member_count;
        } else {
            ++report.nonmember_count;
        }
        if (call == truth[s]) ++correct;
    }
    report.attack_accuracy = static_cast<double>(correct) / static_cast<double>(probe.size());
    return report;
}

} // namespace unlearn
