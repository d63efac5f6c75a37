#pragma once

#include <vector>

#include "unlearn/dataset.hpp"
#include "unlearn/network.hpp"

namespace unlearn {

// accuracy == correct/total computed on integer counts.
struct Metrics {
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;
    std::size_t sample_count = 0;
    std::size_t correct_count = 0;
};

inline std::vector<int> predict(const Network& net, const Tensor& features) {
    const Tensor logits = forward(net, features);
    std::vector<int> labels(logits.rows());
    for (std::size_t s = 0; s < logits.rows(); ++s) {
        const double* row = logits.row(s);
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j) {
            if (row[j] > row[best]) best = j;
        }
        labels[s] = static_cast<int>(best);
    }
    return labels;
}

inline Metrics accuracy(const Network& net, const LabeledDataset& data) {
    if (data.size() == 0) throw InputError("accuracy on an empty dataset");
    const auto predicted = predict(net, data.features);
    std::vector<std::size_t> per_class_correct(data.class_count, 0);
    std::vector<std::size_t> per_class_total(data.class_count, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        per_class_total[data.labels[i]] += 1;
        if (predicted[i] == data.labels[i]) {
            ++correct;
            per_class_correct[data.labels[i]] += 1;
        }
    }
    Metrics m;
    m.sample_count = data.size();
    m.correct_count = correct;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    m.per_class_accuracy.resize(data.class_count, 0.0);
    for (int k = 0; k < data.class_count; ++k) {
        if (per_class_total[k] > 0) {
            m.per_class_accuracy[k] = static_cast<double>(per_class_correct[k]) /
                                      static_cast<double>(per_class_total[k]);
        }
    }
    return m;
}

} // namespace unlearn
