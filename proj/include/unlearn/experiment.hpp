#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "unlearn/attacks.hpp"
#include "unlearn/config.hpp"
#include "unlearn/histogram.hpp"
#include "unlearn/idx.hpp"
#include "unlearn/model_io.hpp"
#include "unlearn/report.hpp"
#include "unlearn/sweeps.hpp"
#include "unlearn/unlearn.hpp"

namespace unlearn {

// Train / test / shadow-pool triple. The shadow pool shares the test-side
// distribution and is disjoint from the training data.
struct ExperimentData {
    LabeledDataset train;
    LabeledDataset test;
    LabeledDataset shadow_pool;
};

namespace detail {

// Balanced carve by class occupancy: the i-th occurrence of a class goes to
// train / test / shadow in that order. Keeps the pool's shuffled row order.
inline ExperimentData carve_pool(const LabeledDataset& pool, int per_class_train,
                                 int per_class_test, int per_class_shadow) {
    std::vector<std::size_t> train_idx, test_idx, shadow_idx;
    std::vector<int> seen(pool.class_count, 0);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        int& count = seen[pool.labels[i]];
        if (count < per_class_train) {
            train_idx.push_back(i);
        } else if (count < per_class_train + per_class_test) {
            test_idx.push_back(i);
        } else if (count < per_class_train + per_class_test + per_class_shadow) {
            shadow_idx.push_back(i);
        }
        ++count;
    }
    ExperimentData data;
    data.train = subset(pool, train_idx, "train");
    data.test = subset(pool, test_idx, "test");
    data.shadow_pool = subset(pool, shadow_idx, "shadow-pool");
    return data;
}

inline std::filesystem::path dataset_cache_dir(const RunConfig& cfg) {
    if (const char* env = std::getenv("UNLEARN_DATA_DIR"); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return std::filesystem::path(cfg.out_dir) / "data_cache";
}

} // namespace detail

// Synthetic data is generated as one pool (single [0,1] rescale for every
// carve), cached as an IDX pair, and always reloaded from the cache so a
// run sees identical bytes whether the cache was cold or warm.
inline ExperimentData acquire_data(const RunConfig& cfg) {
    if (cfg.data.kind == "idx") {
        ExperimentData data;
        data.train = load_idx(cfg.data.train_images, cfg.data.train_labels);
        LabeledDataset full_test = load_idx(cfg.data.test_images, cfg.data.test_labels);
        // Carve the shadow pool from the test side, half and half, seeded.
        Rng rng(cfg.phase_seed("shadow-carve"));
        auto order = shuffled_indices(full_test.size(), rng);
        const std::size_t half = full_test.size() / 2;
        std::vector<std::size_t> test_idx(order.begin(), order.begin() + half);
        std::vector<std::size_t> shadow_idx(order.begin() + half, order.end());
        std::sort(test_idx.begin(), test_idx.end());
        std::sort(shadow_idx.begin(), shadow_idx.end());
        data.test = subset(full_test, test_idx, "test");
        data.shadow_pool = subset(full_test, shadow_idx, "shadow-pool");
        return data;
    }

    const int shadow_per_class = cfg.data.test_per_class;
    const int pool_per_class = cfg.data.per_class + cfg.data.test_per_class + shadow_per_class;
    const std::uint64_t pool_seed = cfg.phase_seed("data-pool");

    const auto cache_dir = detail::dataset_cache_dir(cfg);
    std::filesystem::create_directories(cache_dir);
    std::ostringstream stem;
    stem << "synth_c" << cfg.data.classes << "_m" << pool_per_class << "_d" << cfg.data.dim
         << "_s" << cfg.data.separation << "_seed" << pool_seed;
    const auto images = cache_dir / (stem.str() + "-images.idx");
    const auto labels = cache_dir / (stem.str() + "-labels.idx");
    if (!std::filesystem::exists(images) || !std::filesystem::exists(labels)) {
        const LabeledDataset pool = gen_synthetic(cfg.data.classes, pool_per_class, cfg.data.dim,
                                                  cfg.data.separation, pool_seed);
        save_idx(pool, images.string(), labels.string());
    }
    const LabeledDataset pool = load_idx(images.string(), labels.string());
    return detail::carve_pool(pool, cfg.data.per_class, cfg.data.test_per_class, shadow_per_class);
}

inline DatasetBundle make_bundle(const RunConfig& cfg, const LabeledDataset& train) {
    SplitSpec spec = cfg.split_spec;
    spec.seed = cfg.phase_seed("split");
    return split(train, spec);
}

// Bottom-right square patch for image-shaped features, the last patch^2
// coordinates otherwise.
inline TriggerSpec trigger_for(const RunConfig& cfg, std::size_t dim) {
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim))));
    if (side * side == dim) {
        return square_patch_trigger(side, side, cfg.trigger.target_label, cfg.trigger.patch,
                                    cfg.trigger.value);
    }
    TriggerSpec spec;
    spec.patch_value = cfg.trigger.value;
    spec.target_label = cfg.trigger.target_label;
    const std::size_t count = std::min(dim, cfg.trigger.patch * cfg.trigger.patch);
    for (std::size_t i = dim - count; i < dim; ++i) spec.patch_coords.push_back(i);
    return spec;
}

struct TrainedTarget {
    Network model;
    double seconds = 0.0;
    bool backdoored = false;
};

// M_initial: the full training set, with the forget slice poisoned when the
// trigger is enabled.
inline TrainedTarget train_target(const RunConfig& cfg, const DatasetBundle& bundle) {
    TrainParams params = cfg.target_train;
    params.seed = cfg.phase_seed("target-train");
    const auto t0 = std::chrono::steady_clock::now();
    TrainedTarget out;
    if (cfg.trigger.enabled) {
        const TriggerSpec trigger = trigger_for(cfg, bundle.full.dim());
        out.model = backdoor_train(bundle, trigger, cfg.arch, params);
        out.backdoored = true;
    } else {
        out.model = train_classifier(bundle.full, cfg.arch, params);
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

struct ReferencePhase {
    Network model;
    double seconds = 0.0;
};

inline ReferencePhase run_reference_phase(const RunConfig& cfg, const DatasetBundle& bundle) {
    TrainParams params = cfg.reference_train;
    params.seed = cfg.phase_seed("reference-train");
    const auto t0 = std::chrono::steady_clock::now();
    ReferencePhase phase;
    phase.model = train_reference(bundle.reference_subset, cfg.arch, params);
    phase.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return phase;
}

inline UnlearnResult run_unlearn_phase(const RunConfig& cfg, const Network& initial,
                                       const Network& reference, const DatasetBundle& bundle) {
    UnlearnConfig ucfg = cfg.unlearn_cfg;
    ucfg.seed = cfg.phase_seed("unlearn");
    return unlearn(initial, reference, bundle, ucfg);
}

inline RetrainResult run_retrain_phase(const RunConfig& cfg, const DatasetBundle& bundle) {
    TrainParams params = cfg.target_train;
    params.seed = cfg.phase_seed("retrain");
    return retrain_baseline(bundle, cfg.arch, params);
}

struct AttackPhase {
    AttackModel model;
    double seconds = 0.0;
};

inline AttackPhase build_attack(const RunConfig& cfg, const ExperimentData& data) {
    ShadowConfig scfg;
    scfg.n_shadow = cfg.shadow.n_shadow;
    scfg.shadow_data = data.shadow_pool;
    scfg.in_fraction = cfg.shadow.in_fraction;
    scfg.attack_feature_k = cfg.shadow.feature_k;
    scfg.seed = cfg.phase_seed("shadow");
    TrainParams params = cfg.shadow.train;
    params.seed = cfg.phase_seed("shadow-train");
    const auto t0 = std::chrono::steady_clock::now();
    const LabeledDataset corpus = build_shadow_corpus(scfg, cfg.arch, params);
    AttackTrainParams attack_params;
    attack_params.seed = cfg.phase_seed("attack");
    AttackPhase phase;
    phase.model = train_attack_model(corpus, attack_params);
    phase.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return phase;
}

// One JSONL record per (model, probe, metric).
inline json audit_record(const RunConfig& cfg, const std::string& model_name,
                         const std::string& probe, const std::string& metric, double value) {
    return json{{"schema_version", kReportSchemaVersion},
                {"config_hash", config_hash(cfg)},
                {"master_seed", cfg.master_seed},
                {"model", model_name},
                {"probe", probe},
                {"metric", metric},
                {"value", value}};
}

inline void write_manifest(const RunConfig& cfg, const std::string& phase,
                           const std::string& model_file, double seconds,
                           const std::string& path) {
    json manifest{{"schema_version", kReportSchemaVersion},
                  {"config_hash", config_hash(cfg)},
                  {"master_seed", cfg.master_seed},
                  {"arch", cfg.arch},
                  {"phase", phase},
                  {"model_file", model_file},
                  {"seconds", seconds}};
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << manifest.dump(2) << '\n';
}

} // namespace unlearn
