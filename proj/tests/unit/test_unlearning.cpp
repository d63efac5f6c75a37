#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <set>

#include "unlearn/metrics.hpp"
#include "unlearn/unlearn.hpp"

using namespace unlearn;
using Catch::Approx;

namespace {

struct Fixture {
    DatasetBundle bundle;
    Network target;    // trained on the full set
    Network reference; // trained on the reference subset only
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture fx;
        const LabeledDataset full = gen_synthetic(3, 100, 16, 6.0, 501);
        SplitSpec spec;
        spec.forget_fraction = 0.05;
        spec.reference_fraction = 0.2;
        spec.seed = 502;
        fx.bundle = split(full, spec);
        TrainParams tp;
        tp.epochs = 25;
        tp.learning_rate = 0.1;
        tp.batch_size = 16;
        tp.seed = 503;
        fx.target = train_classifier(full, "16-12-3", tp);
        TrainParams rp = tp;
        rp.seed = 504;
        rp.epochs = 30;
        fx.reference = train_reference(fx.bundle.reference_subset, "16-12-3", rp);
        return fx;
    }();
    return f;
}

} // namespace

TEST_CASE("UnlearnConfig: invalid values are configuration errors") {
    UnlearnConfig cfg;
    cfg.lambda = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.lambda = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.lambda = 0.01;
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.max_iterations = 10;
    cfg.stop_kl = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.stop_kl = 0.0;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("unlearn: reference == initial is a fixed point under the early stop") {
    const auto& fx = fixture();
    UnlearnConfig cfg;
    cfg.stop_kl = 1e-9; // initial KL is exactly zero when the models coincide
    const UnlearnResult res = unlearn::unlearn(fx.target, fx.target, fx.bundle, cfg);
    CHECK(parameter_vector(res.model) == parameter_vector(fx.target));
    REQUIRE(res.trace.rows.size() == 1);
    CHECK(res.trace.rows[0].iteration == 1);
    CHECK(res.trace.stopped_early);
    CHECK(res.trace.rows[0].kl == Approx(0.0).margin(1e-12));
}

TEST_CASE("unlearn: reference parameters are bitwise unchanged") {
    const auto& fx = fixture();
    const auto before = parameter_vector(fx.reference);
    UnlearnConfig cfg;
    cfg.max_iterations = 3;
    cfg.stop_kl = 0.0;
    const UnlearnResult res = unlearn::unlearn(fx.target, fx.reference, fx.bundle, cfg);
    CHECK(parameter_vector(fx.reference) == before);
    CHECK(res.trace.rows.size() >= 2);
}

TEST_CASE("unlearn: no forget-set index ever enters an accuracy-penalty batch") {
    const auto& fx = fixture();
    const std::set<std::size_t> forget(fx.bundle.forget_idx.begin(), fx.bundle.forget_idx.end());
    UnlearnConfig cfg;
    cfg.max_iterations = 3;
    cfg.stop_kl = 0.0;
    std::size_t batches = 0;
    const auto observer = [&](const std::vector<std::size_t>& idx) {
        ++batches;
        for (std::size_t i : idx) CHECK(forget.count(i) == 0);
    };
    unlearn::unlearn(fx.target, fx.reference, fx.bundle, cfg, observer);
    CHECK(batches > 0);

    UnlearnConfig remain_cfg = cfg;
    remain_cfg.ce_pool = CePool::remain;
    batches = 0;
    unlearn::unlearn(fx.target, fx.reference, fx.bundle, remain_cfg, observer);
    CHECK(batches > 0);
}

TEST_CASE("unlearn: pure forgetting term strictly reduces the forget-set KL") {
    const auto& fx = fixture();
    UnlearnConfig cfg;
    cfg.lambda = 1.0;
    cfg.learning_rate = 0.005;
    cfg.max_iterations = 5;
    cfg.stop_kl = 0.0;
    const UnlearnResult res = unlearn::unlearn(fx.target, fx.reference, fx.bundle, cfg);
    REQUIRE(res.trace.rows.size() >= 2);
    CHECK(res.trace.rows.back().kl < res.trace.rows.front().kl);
    for (std::size_t i = 0; i < res.trace.rows.size(); ++i) {
        CHECK(res.trace.rows[i].iteration == static_cast<int>(i) + 1);
        CHECK(std::isfinite(res.trace.rows[i].loss));
    }
}

TEST_CASE("unlearn: lambda=1 hurts held-data accuracy more than lambda=0.01") {
    const auto& fx = fixture();
    UnlearnConfig aggressive;
    aggressive.lambda = 1.0;
    aggressive.max_iterations = 10;
    aggressive.stop_kl = 1e-4;
    aggressive.learning_rate = 0.05;
    UnlearnConfig gentle = aggressive;
    gentle.lambda = 0.01;
    const UnlearnResult hard = unlearn::unlearn(fx.target, fx.reference, fx.bundle, aggressive);
    const UnlearnResult soft = unlearn::unlearn(fx.target, fx.reference, fx.bundle, gentle);
    const double acc_hard = accuracy(hard.model, fx.bundle.remain).accuracy;
    const double acc_soft = accuracy(soft.model, fx.bundle.remain).accuracy;
    CHECK(acc_soft >= acc_hard);
}

TEST_CASE("unlearn: identical configs reproduce the final model bitwise") {
    const auto& fx = fixture();
    UnlearnConfig cfg;
    cfg.max_iterations = 2;
    cfg.stop_kl = 0.0;
    cfg.seed = 99;
    const UnlearnResult a = unlearn::unlearn(fx.target, fx.reference, fx.bundle, cfg);
    const UnlearnResult b = unlearn::unlearn(fx.target, fx.reference, fx.bundle, cfg);
    CHECK(parameter_vector(a.model) == parameter_vector(b.model));
}

TEST_CASE("unlearn: non-finite forward aborts with the trace so far") {
    const auto& fx = fixture();
    Network broken = fx.target;
    std::fill(broken.layers[0].weights.data.begin(), broken.layers[0].weights.data.end(), 1e308);
    UnlearnConfig cfg;
    CHECK_THROWS_AS(unlearn::unlearn(broken, fx.reference, fx.bundle, cfg), UnlearnNumericError);
}

TEST_CASE("unlearn: empty forget set is a configuration error") {
    const auto& fx = fixture();
    DatasetBundle empty = fx.bundle;
    empty.forget = LabeledDataset{};
    empty.forget.class_count = 3;
    empty.forget.features = Tensor::zeros({0, 16});
    UnlearnConfig cfg;
    CHECK_THROWS_AS(unlearn::unlearn(fx.target, fx.reference, empty, cfg), ConfigError);
}

TEST_CASE("train_reference: empty subset is a configuration error, zero epochs is the init") {
    LabeledDataset empty;
    empty.class_count = 3;
    empty.features = Tensor::zeros({0, 16});
    TrainParams p;
    CHECK_THROWS_AS(train_reference(empty, "16-12-3", p), ConfigError);

    const auto& fx = fixture();
    p.epochs = 0;
    p.seed = 77;
    const Network ref = train_reference(fx.bundle.reference_subset, "16-12-3", p);
    CHECK(parameter_vector(ref) == parameter_vector(init_network("16-12-3", derive_seed(77, "init"))));
}

TEST_CASE("verify_reference: identical models give zero divergence") {
    const auto& fx = fixture();
    CHECK(verify_reference(fx.target, fx.target, fx.bundle.remain) == Approx(0.0).margin(1e-12));
}

TEST_CASE("verify_reference: untrained net diverges, reference stays close to a retrain") {
    const auto& fx = fixture();
    TrainParams p;
    p.epochs = 25;
    p.learning_rate = 0.1;
    p.batch_size = 16;
    p.seed = 601;
    const RetrainResult retrain_a = retrain_baseline(fx.bundle, "16-12-3", p);
    p.seed = 602;
    const RetrainResult retrain_b = retrain_baseline(fx.bundle, "16-12-3", p);

    const Network untrained = init_network("16-12-3", 603);
    const double far = verify_reference(untrained, retrain_a.model, fx.bundle.remain);
    const double retrain_gap = verify_reference(retrain_b.model, retrain_a.model, fx.bundle.remain);
    const double reference_gap = verify_reference(fx.reference, retrain_a.model, fx.bundle.remain);
    CHECK(far >= 0.5);
    CHECK(retrain_gap <= 0.1);
    CHECK(reference_gap <= retrain_gap + 0.35);
}

TEST_CASE("retrain_baseline: zero epochs sits near chance and reports its wall time") {
    const auto& fx = fixture();
    TrainParams p;
    p.epochs = 0;
    p.seed = 11;
    const RetrainResult res = retrain_baseline(fx.bundle, "16-12-3", p);
    CHECK(res.seconds >= 0.0);
    const double acc = accuracy(res.model, fx.bundle.remain).accuracy;
    CHECK(acc <= 1.0 / 3.0 + 0.25);
}

TEST_CASE("write_trace_csv: one header plus one line per row") {
    const auto& fx = fixture();
    UnlearnConfig cfg;
    cfg.max_iterations = 2;
    cfg.stop_kl = 0.0;
    const UnlearnResult res = unlearn::unlearn(fx.target, fx.reference, fx.bundle, cfg);
    const auto path = std::filesystem::temp_directory_path() / "unlearn_trace_test.csv";
    write_trace_csv(res.trace, path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,kl,ce,loss,forget_acc,remain_acc,seconds");
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) ++lines;
    }
    CHECK(lines == res.trace.rows.size());
    std::filesystem::remove(path);
}
