#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "unlearn/dataset.hpp"
#include "unlearn/idx.hpp"
#include "unlearn/metrics.hpp"
#include "unlearn/train.hpp"

using namespace unlearn;
using Catch::Approx;

namespace {

LabeledDataset flat_dataset(std::size_t n, int classes) {
    LabeledDataset ds;
    ds.class_count = classes;
    ds.source_id = "flat";
    ds.features = Tensor::zeros({n, 1});
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) ds.labels[i] = static_cast<int>(i % classes);
    return ds;
}

void check_partition(const DatasetBundle& b) {
    std::set<std::size_t> forget(b.forget_idx.begin(), b.forget_idx.end());
    std::set<std::size_t> remain(b.remain_idx.begin(), b.remain_idx.end());
    std::set<std::size_t> reference(b.reference_idx.begin(), b.reference_idx.end());
    CHECK(forget.size() == b.forget_idx.size());
    CHECK(remain.size() == b.remain_idx.size());
    CHECK(forget.size() + remain.size() == b.full.size());
    for (std::size_t i : forget) CHECK(remain.count(i) == 0);
    std::set<std::size_t> all = forget;
    all.insert(remain.begin(), remain.end());
    CHECK(all.size() == b.full.size());
    CHECK(*all.rbegin() == b.full.size() - 1);
    for (std::size_t i : reference) CHECK(remain.count(i) == 1);
}

} // namespace

TEST_CASE("split: 60000 samples at 1/100 and 1/10 give 600 and 6000") {
    const LabeledDataset full = flat_dataset(60000, 10);
    SplitSpec spec;
    spec.forget_fraction = 1.0 / 100.0;
    spec.reference_fraction = 1.0 / 10.0;
    spec.seed = 3;
    const DatasetBundle b = split(full, spec);
    CHECK(b.forget.size() == 600);
    CHECK(b.remain.size() == 59400);
    CHECK(b.reference_subset.size() == 6000);
    check_partition(b);
}

TEST_CASE("split: partition invariants hold across seeds and modes") {
    const LabeledDataset full = flat_dataset(503, 7);
    for (const bool stratified : {false, true}) {
        for (std::uint64_t seed : {0ULL, 1ULL, 42ULL}) {
            SplitSpec spec;
            spec.forget_fraction = 0.1;
            spec.reference_fraction = 0.25;
            spec.seed = seed;
            spec.stratified = stratified;
            check_partition(split(full, spec));
        }
    }
}

TEST_CASE("split: identical specs give identical index sets") {
    const LabeledDataset full = flat_dataset(1000, 10);
    SplitSpec spec;
    spec.seed = 77;
    const DatasetBundle a = split(full, spec);
    const DatasetBundle b = split(full, spec);
    CHECK(a.forget_idx == b.forget_idx);
    CHECK(a.remain_idx == b.remain_idx);
    CHECK(a.reference_idx == b.reference_idx);
    spec.seed = 78;
    const DatasetBundle c = split(full, spec);
    CHECK(a.forget_idx != c.forget_idx);
}

TEST_CASE("split: stratified forget counts are within 1 of proportionality") {
    LabeledDataset full = flat_dataset(1000, 4);
    SplitSpec spec;
    spec.forget_fraction = 0.1;
    spec.stratified = true;
    spec.seed = 5;
    const DatasetBundle b = split(full, spec);
    std::vector<int> per_class(4, 0);
    for (std::size_t i : b.forget_idx) per_class[full.labels[i]] += 1;
    for (int k = 0; k < 4; ++k) {
        const double expected = 100.0 * 250.0 / 1000.0;
        CHECK(std::abs(per_class[k] - expected) <= 1.0);
    }
}

TEST_CASE("split: degenerate fractions are configuration errors") {
    const LabeledDataset full = flat_dataset(100, 2);
    SplitSpec spec;
    spec.forget_fraction = 0.001; // rounds to zero samples
    CHECK_THROWS_AS(split(full, spec), ConfigError);
    spec.forget_fraction = 0.999; // forget set swallows everything
    spec.reference_fraction = 0.1;
    CHECK_THROWS_AS(split(full, spec), ConfigError);
    spec.forget_fraction = 0.5;
    spec.reference_fraction = 0.6; // reference cannot exceed the remainder
    CHECK_THROWS_AS(split(full, spec), ConfigError);
}

TEST_CASE("gen_synthetic: well-separated blobs are linearly separable") {
    const LabeledDataset ds = gen_synthetic(2, 50, 2, 10.0, 7);
    CHECK(ds.size() == 100);
    TrainParams p;
    p.epochs = 60;
    p.learning_rate = 0.5;
    p.batch_size = 10;
    p.seed = 1;
    const Network linear = train_classifier(ds, "2-2", p);
    CHECK(accuracy(linear, ds).accuracy >= 0.99);
}

TEST_CASE("gen_synthetic: identical seeds reproduce the dataset") {
    const LabeledDataset a = gen_synthetic(3, 20, 4, 2.5, 99);
    const LabeledDataset b = gen_synthetic(3, 20, 4, 2.5, 99);
    CHECK(a.features.data == b.features.data);
    CHECK(a.labels == b.labels);
    const LabeledDataset c = gen_synthetic(3, 20, 4, 2.5, 100);
    CHECK(a.features.data != c.features.data);
}

TEST_CASE("gen_synthetic: zero separation leaves held-out accuracy near chance") {
    const LabeledDataset train = gen_synthetic(2, 150, 3, 0.0, 11);
    const LabeledDataset probe = gen_synthetic(2, 150, 3, 0.0, 12);
    TrainParams p;
    p.epochs = 30;
    p.learning_rate = 0.1;
    p.seed = 2;
    const Network net = train_classifier(train, "3-8-2", p);
    const double acc = accuracy(net, probe).accuracy;
    CHECK(acc >= 0.4);
    CHECK(acc <= 0.6);
}

TEST_CASE("gen_synthetic: features are scaled into [0,1] and balanced") {
    const LabeledDataset ds = gen_synthetic(4, 25, 6, 3.0, 5);
    for (double v : ds.features.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    std::vector<int> counts(4, 0);
    for (int y : ds.labels) counts[y] += 1;
    for (int c : counts) CHECK(c == 25);
}

TEST_CASE("idx: save then load quantizes once, then round-trips exactly") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto img = (dir / "unlearn_idx_img.idx").string();
    const auto lbl = (dir / "unlearn_idx_lbl.idx").string();

    const LabeledDataset ds = gen_synthetic(3, 10, 9, 4.0, 21);
    save_idx(ds, img, lbl);
    const LabeledDataset once = load_idx(img, lbl);
    CHECK(once.size() == ds.size());
    CHECK(once.labels == ds.labels);
    for (std::size_t k = 0; k < ds.features.size(); ++k) {
        const double quantized = std::llround(ds.features.data[k] * 255.0) / 255.0;
        CHECK(once.features.data[k] == Approx(quantized).margin(1e-12));
    }

    save_idx(once, img, lbl);
    const LabeledDataset twice = load_idx(img, lbl);
    CHECK(twice.features.data == once.features.data);
    CHECK(twice.labels == once.labels);
    std::filesystem::remove(img);
    std::filesystem::remove(lbl);
}

TEST_CASE("idx: MNIST-scale file shape loads as 60000 x 784 with 10 classes") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto img = (dir / "unlearn_idx_big_img.idx").string();
    const auto lbl = (dir / "unlearn_idx_big_lbl.idx").string();
    LabeledDataset big;
    big.class_count = 10;
    big.source_id = "big";
    big.features = Tensor::zeros({60000, 784});
    big.labels.resize(60000);
    for (std::size_t i = 0; i < 60000; ++i) big.labels[i] = static_cast<int>(i % 10);
    save_idx(big, img, lbl);

    const LabeledDataset loaded = load_idx(img, lbl);
    CHECK(loaded.size() == 60000);
    CHECK(loaded.dim() == 784);
    CHECK(loaded.class_count == 10);
    std::filesystem::remove(img);
    std::filesystem::remove(lbl);
}

TEST_CASE("idx: count mismatch between images and labels is a format error") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto img = (dir / "unlearn_idx_mm_img.idx").string();
    const auto lbl = (dir / "unlearn_idx_mm_lbl.idx").string();
    const LabeledDataset a = gen_synthetic(2, 5, 4, 1.0, 1);
    const LabeledDataset b = gen_synthetic(2, 6, 4, 1.0, 1);
    save_idx(a, img, (dir / "tmp_lbl").string());
    save_idx(b, (dir / "tmp_img").string(), lbl);
    CHECK_THROWS_AS(load_idx(img, lbl), FormatError);
    for (const char* f : {"unlearn_idx_mm_img.idx", "unlearn_idx_mm_lbl.idx", "tmp_lbl", "tmp_img"}) {
        std::filesystem::remove(dir / f);
    }
}

TEST_CASE("idx: empty-but-valid header yields an accepted n=0 dataset") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto img = (dir / "unlearn_idx_empty_img.idx").string();
    const auto lbl = (dir / "unlearn_idx_empty_lbl.idx").string();
    LabeledDataset empty;
    empty.class_count = 0;
    empty.features = Tensor::zeros({0, 16});
    save_idx(empty, img, lbl);
    const LabeledDataset loaded = load_idx(img, lbl);
    CHECK(loaded.size() == 0);
    std::filesystem::remove(img);
    std::filesystem::remove(lbl);
}

TEST_CASE("idx: truncated pixel data is a format error") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto img = (dir / "unlearn_idx_tr_img.idx").string();
    const auto lbl = (dir / "unlearn_idx_tr_lbl.idx").string();
    const LabeledDataset ds = gen_synthetic(2, 10, 4, 1.0, 3);
    save_idx(ds, img, lbl);
    std::filesystem::resize_file(img, std::filesystem::file_size(img) - 3);
    CHECK_THROWS_AS(load_idx(img, lbl), FormatError);
    std::filesystem::remove(img);
    std::filesystem::remove(lbl);
}

TEST_CASE("idx: wrong magic is a format error") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto img = (dir / "unlearn_idx_bad_img.idx").string();
    const auto lbl = (dir / "unlearn_idx_bad_lbl.idx").string();
    const LabeledDataset ds = gen_synthetic(2, 4, 4, 1.0, 3);
    save_idx(ds, img, lbl);
    {
        std::fstream f(img, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        const char bad[4] = {0, 0, 9, 9};
        f.write(bad, 4);
    }
    CHECK_THROWS_AS(load_idx(img, lbl), FormatError);
    std::filesystem::remove(img);
    std::filesystem::remove(lbl);
}
