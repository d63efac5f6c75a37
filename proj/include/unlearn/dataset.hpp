#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "unlearn/errors.hpp"
#include "unlearn/rng.hpp"
#include "unlearn/tensor.hpp"

namespace unlearn {

// Immutable after construction; any number of concurrent readers.
struct LabeledDataset {
    Tensor features; // [n x d], values in [0,1]
    std::vector<int> labels;
    int class_count = 0;
    std::string source_id;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols(); }

    void validate() const {
        if (features.rows() != labels.size()) {
            throw DimensionError("dataset feature rows do not match label count");
        }
        for (int y : labels) {
            if (y < 0 || y >= class_count) {
                throw InputError("label " + std::to_string(y) + " outside class range");
            }
        }
        require_finite(features, "dataset features");
    }
};

inline LabeledDataset subset(const LabeledDataset& data, const std::vector<std::size_t>& idx,
                             const std::string& tag) {
    LabeledDataset out;
    out.class_count = data.class_count;
    out.source_id = data.source_id + "/" + tag;
    out.features = Tensor::zeros({idx.size(), data.dim()});
    out.labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= data.size()) throw InputError("subset index out of range");
        std::copy(data.features.row(idx[i]), data.features.row(idx[i]) + data.dim(),
                  out.features.row(i));
        out.labels[i] = data.labels[idx[i]];
    }
    return out;
}

struct SplitSpec {
    double forget_fraction = 0.01;   // |forget| / |full|
    double reference_fraction = 0.1; // |reference| / |full|, drawn from the remainder
    std::uint64_t seed = 0;
    bool stratified = false;
};

// Partition of the full set into forget/remain plus the reference subset of
// the remainder. Index vectors point back into `full`.
struct DatasetBundle {
    LabeledDataset full;
    LabeledDataset forget;
    LabeledDataset remain;
    LabeledDataset reference_subset;
    std::vector<std::size_t> forget_idx;
    std::vector<std::size_t> remain_idx;
    std::vector<std::size_t> reference_idx; // indices into `full`, subset of remain_idx
};

namespace detail {

// Per-class proportional counts, largest remainder rounding to hit `want`.
inline std::vector<std::size_t> stratified_counts(const std::vector<std::size_t>& class_sizes,
                                                  std::size_t total, std::size_t want) {
    const std::size_t c = class_sizes.size();
    std::vector<std::size_t> counts(c);
    std::vector<std::pair<double, std::size_t>> remainders(c);
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < c; ++k) {
        const double exact = static_cast<double>(want) * static_cast<double>(class_sizes[k]) /
                             static_cast<double>(total);
        counts[k] = static_cast<std::size_t>(exact);
        remainders[k] = {exact - static_cast<double>(counts[k]), k};
        assigned += counts[k];
    }
    std::sort(remainders.begin(), remainders.end(),
              [](const auto& a, const auto& b) {
                  return a.first != b.first ? a.first > b.first : a.second < b.second;
              });
    for (std::size_t j = 0; assigned < want && j < c; ++j) {
        counts[remainders[j].second] += 1;
        ++assigned;
    }
    return counts;
}

} // namespace detail

inline DatasetBundle split(const LabeledDataset& full, const SplitSpec& spec) {
    if (spec.forget_fraction <= 0.0 || spec.forget_fraction >= 1.0 ||
        spec.reference_fraction <= 0.0 || spec.reference_fraction >= 1.0) {
        throw ConfigError("split fractions must lie in (0,1)");
    }
    const std::size_t n = full.size();
    const auto forget_n = static_cast<std::size_t>(std::llround(spec.forget_fraction * static_cast<double>(n)));
    const auto reference_n = static_cast<std::size_t>(std::llround(spec.reference_fraction * static_cast<double>(n)));
    if (forget_n < 1 || reference_n < 1) {
        throw ConfigError("split fractions yield an empty forget or reference set");
    }
    if (forget_n >= n) {
        throw ConfigError("forget fraction leaves no remaining data");
    }
    if (reference_n > n - forget_n) {
        throw ConfigError("reference fraction exceeds the remaining data");
    }

    Rng rng(spec.seed);
    DatasetBundle bundle;
    bundle.full = full;

    if (spec.stratified) {
        std::vector<std::vector<std::size_t>> by_class(full.class_count);
        for (std::size_t i = 0; i < n; ++i) by_class[full.labels[i]].push_back(i);
        std::vector<std::size_t> class_sizes;
        for (const auto& v : by_class) class_sizes.push_back(v.size());
        const auto counts = detail::stratified_counts(class_sizes, n, forget_n);
        for (std::size_t k = 0; k < by_class.size(); ++k) {
            rng.shuffle(by_class[k]);
            if (counts[k] > by_class[k].size()) {
                throw ConfigError("stratified forget count exceeds class size");
            }
            bundle.forget_idx.insert(bundle.forget_idx.end(), by_class[k].begin(),
                                     by_class[k].begin() + counts[k]);
            bundle.remain_idx.insert(bundle.remain_idx.end(), by_class[k].begin() + counts[k],
                                     by_class[k].end());
        }
        std::sort(bundle.forget_idx.begin(), bundle.forget_idx.end());
        std::sort(bundle.remain_idx.begin(), bundle.remain_idx.end());
    } else {
        auto order = shuffled_indices(n, rng);
        bundle.forget_idx.assign(order.begin(), order.begin() + forget_n);
        bundle.remain_idx.assign(order.begin() + forget_n, order.end());
        std::sort(bundle.forget_idx.begin(), bundle.forget_idx.end());
        std::sort(bundle.remain_idx.begin(), bundle.remain_idx.end());
    }

    auto remain_order = bundle.remain_idx;
    rng.shuffle(remain_order);
    bundle.reference_idx.assign(remain_order.begin(), remain_order.begin() + reference_n);
    std::sort(bundle.reference_idx.begin(), bundle.reference_idx.end());

    bundle.forget = subset(full, bundle.forget_idx, "forget");
    bundle.remain = subset(full, bundle.remain_idx, "remain");
    bundle.reference_subset = subset(full, bundle.reference_idx, "reference");
    return bundle;
}

// c Gaussian blobs with class-mean spacing `separation` (exact for c <= dim),
// balanced and shuffled, then affinely rescaled into [0,1].
inline LabeledDataset gen_synthetic(int classes, int per_class, int dim, double separation,
                                    std::uint64_t seed) {
    if (classes < 2 || per_class < 1 || dim < 1) {
        throw ConfigError("gen_synthetic needs classes >= 2, per_class >= 1, dim >= 1");
    }
    const std::size_t n = static_cast<std::size_t>(classes) * static_cast<std::size_t>(per_class);
    Rng rng(seed);

    LabeledDataset out;
    out.class_count = classes;
    out.source_id = "synthetic(c=" + std::to_string(classes) + ",m=" + std::to_string(per_class) +
                    ",d=" + std::to_string(dim) + ",sep=" + std::to_string(separation) +
                    ",seed=" + std::to_string(seed) + ")";
    out.features = Tensor::zeros({n, static_cast<std::size_t>(dim)});
    out.labels.resize(n);

    // Class k's mean sits on axis k % dim; pairwise distance between means on
    // distinct axes is exactly `separation`.
    const double axis_offset = separation / std::sqrt(2.0);
    std::vector<std::size_t> order = shuffled_indices(n, rng);
    for (std::size_t slot = 0; slot < n; ++slot) {
        const std::size_t sample = order[slot];
        const int k = static_cast<int>(sample) / per_class;
        const std::size_t axis = static_cast<std::size_t>(k) % static_cast<std::size_t>(dim);
        const double mult = 1.0 + static_cast<double>(k / dim);
        double* row = out.features.row(slot);
        for (int j = 0; j < dim; ++j) row[j] = rng.normal();
        row[axis] += axis_offset * mult;
        out.labels[slot] = k;
    }

    double lo = out.features.data[0], hi = out.features.data[0];
    for (double v : out.features.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = (hi > lo) ? hi - lo : 1.0;
    for (double& v : out.features.data) v = (v - lo) / span;
    return out;
}

} // namespace unlearn
