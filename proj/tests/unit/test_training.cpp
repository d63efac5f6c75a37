#include <catch2/catch_amalgamated.hpp>

#include "unlearn/histogram.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/train.hpp"

using namespace unlearn;
using Catch::Approx;

namespace {

// Balanced, easily separable fixture shared across cases.
const LabeledDataset& blobs() {
    static const LabeledDataset ds = gen_synthetic(3, 60, 8, 7.0, 1234);
    return ds;
}

} // namespace

TEST_CASE("train_classifier: identical seed/config/data give bitwise-identical parameters") {
    TrainParams p;
    p.epochs = 3;
    p.learning_rate = 0.1;
    p.seed = 42;
    const Network a = train_classifier(blobs(), "8-6-3", p);
    const Network b = train_classifier(blobs(), "8-6-3", p);
    CHECK(parameter_vector(a) == parameter_vector(b));

    p.seed = 43;
    const Network c = train_classifier(blobs(), "8-6-3", p);
    CHECK(parameter_vector(a) != parameter_vector(c));
}

TEST_CASE("train_classifier: zero epochs returns the seeded init unchanged") {
    TrainParams p;
    p.epochs = 0;
    p.seed = 9;
    const Network trained = train_classifier(blobs(), "8-6-3", p);
    const Network raw = init_network("8-6-3", derive_seed(9, "init"));
    CHECK(parameter_vector(trained) == parameter_vector(raw));
}

TEST_CASE("train_classifier: learns separable blobs") {
    TrainParams p;
    p.epochs = 30;
    p.learning_rate = 0.1;
    p.seed = 7;
    const Network net = train_classifier(blobs(), "8-16-3", p);
    CHECK(accuracy(net, blobs()).accuracy >= 0.98);
}

TEST_CASE("train_classifier: empty dataset or bad params are configuration errors") {
    LabeledDataset empty;
    empty.class_count = 2;
    empty.features = Tensor::zeros({0, 4});
    TrainParams p;
    CHECK_THROWS_AS(train_classifier(empty, "4-2", p), ConfigError);
    p.batch_size = 0;
    CHECK_THROWS_AS(train_classifier(blobs(), "8-3", p), ConfigError);
}

TEST_CASE("accuracy: constant-class predictor scores exactly 1/c on balanced data") {
    Network net = init_network("8-3", 0);
    for (auto& l : net.layers) {
        std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
        std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
    }
    net.layers.back().bias.data[1] = 5.0; // always predicts class 1
    const Metrics m = accuracy(net, blobs());
    CHECK(m.accuracy == Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(m.correct_count == blobs().size() / 3);
    CHECK(m.per_class_accuracy[1] == 1.0);
    CHECK(m.per_class_accuracy[0] == 0.0);
}

TEST_CASE("accuracy: a tiny memorized set scores 1.0") {
    const LabeledDataset ten = subset(blobs(), {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, "ten");
    TrainParams p;
    p.epochs = 200;
    p.learning_rate = 0.2;
    p.batch_size = 10;
    p.seed = 3;
    const Network net = train_classifier(ten, "8-16-3", p);
    CHECK(accuracy(net, ten).accuracy == 1.0);
}

TEST_CASE("accuracy: empty dataset is an input error") {
    LabeledDataset empty;
    empty.class_count = 2;
    empty.features = Tensor::zeros({0, 8});
    const Network net = init_network("8-2", 0);
    CHECK_THROWS_AS(accuracy(net, empty), InputError);
}

TEST_CASE("posterior_histogram: perfectly confident model mass lands in the top bin") {
    TrainParams p;
    p.epochs = 120;
    p.learning_rate = 0.3;
    p.seed = 5;
    const Network net = train_classifier(blobs(), "8-16-3", p);
    const PosteriorHistogram h = posterior_histogram(net, blobs());
    CHECK(h.density[PosteriorHistogram::kBins - 1] >= 0.95);
}

TEST_CASE("posterior_histogram: uniform 10-class model mass lands in the bin containing 0.1") {
    Network net = init_network("4-10", 0);
    for (auto& l : net.layers) {
        std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
        std::fill(l.bias.data.begin(), l.bias.data.end(), 0.0);
    }
    LabeledDataset data;
    data.class_count = 10;
    data.features = Tensor::zeros({20, 4});
    data.labels.assign(20, 0);
    const PosteriorHistogram h = posterior_histogram(net, data);
    const auto bin_of_01 = static_cast<std::size_t>(0.1 * PosteriorHistogram::kBins);
    CHECK(h.density[bin_of_01] == Approx(1.0).margin(1e-12));
}

TEST_CASE("posterior_histogram: permutation-invariant in input order") {
    const Network net = init_network("8-6-3", 31);
    const LabeledDataset& ds = blobs();
    std::vector<std::size_t> reversed(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) reversed[i] = ds.size() - 1 - i;
    const LabeledDataset flipped = subset(ds, reversed, "reversed");
    const PosteriorHistogram a = posterior_histogram(net, ds);
    const PosteriorHistogram b = posterior_histogram(net, flipped);
    for (std::size_t bin = 0; bin < PosteriorHistogram::kBins; ++bin) {
        CHECK(a.density[bin] == b.density[bin]);
    }
}

TEST_CASE("posterior_histogram: densities sum to one") {
    const Network net = init_network("8-6-3", 32);
    const PosteriorHistogram h = posterior_histogram(net, blobs());
    double sum = 0.0;
    for (double d : h.density) sum += d;
    CHECK(sum == Approx(1.0).margin(1e-9));
}

TEST_CASE("histogram_kl: zero on identical histograms, positive on disjoint ones") {
    std::vector<double> low(100, 0.11), high(100, 0.97);
    const PosteriorHistogram a = histogram_of_values(low);
    const PosteriorHistogram b = histogram_of_values(high);
    CHECK(histogram_kl(a, a) == Approx(0.0).margin(1e-12));
    CHECK(histogram_kl(a, b) > 1.0);
}

TEST_CASE("max_posteriors: sigmoid transform flag changes the statistic, not the model") {
    const Network net = init_network("8-6-3", 33);
    const auto plain = max_posteriors(net, blobs(), false);
    const auto transformed = max_posteriors(net, blobs(), true);
    CHECK(plain.size() == transformed.size());
    CHECK(plain != transformed);
    for (double v : transformed) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
