#include <catch2/catch_amalgamated.hpp>

#include "unlearn/losses.hpp"

#include "test_helpers.hpp"

using namespace unlearn;
using Catch::Approx;

namespace {

PosteriorMatrix rows(std::vector<std::vector<double>> r, ModelTag tag = ModelTag::target) {
    const std::size_t n = r.size();
    const std::size_t c = r[0].size();
    Tensor t = Tensor::zeros({n, c});
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(r[i].begin(), r[i].end(), t.row(i));
    }
    return PosteriorMatrix{std::move(t), tag};
}

PosteriorMatrix random_distribution(std::size_t n, std::size_t c, Rng& rng) {
    Tensor t = Tensor::zeros({n, c});
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            t.at(i, j) = -std::log(1.0 - rng.uniform());
            sum += t.at(i, j);
        }
        for (std::size_t j = 0; j < c; ++j) t.at(i, j) /= sum;
    }
    return PosteriorMatrix{std::move(t), ModelTag::target};
}

} // namespace

TEST_CASE("kl_loss: identical distributions give zero") {
    const auto p = rows({{0.2, 0.3, 0.5}}, ModelTag::reference);
    CHECK(kl_loss(p, p) == Approx(0.0).margin(1e-9));
}

TEST_CASE("kl_loss: (0.5,0.5) vs (0.25,0.75) is 0.143841 nats") {
    const auto ref = rows({{0.5, 0.5}}, ModelTag::reference);
    const auto tgt = rows({{0.25, 0.75}});
    // 0.5*ln(0.5/0.25) + 0.5*ln(0.5/0.75)
    const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
    CHECK(expected == Approx(0.143841).margin(5e-7));
    CHECK(kl_loss(ref, tgt) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("kl_loss: exact zero in the target stays finite through the clamp") {
    const auto ref = rows({{0.5, 0.5}}, ModelTag::reference);
    const auto tgt = rows({{1.0, 0.0}});
    const double v = kl_loss(ref, tgt);
    CHECK(std::isfinite(v));
    CHECK(v == Approx(0.5 * std::log(0.5) - 0.5 * std::log(1e-12) + 0.5 * std::log(0.5)).epsilon(1e-9));
}

TEST_CASE("kl_loss: batch mean over rows") {
    const auto ref = rows({{0.5, 0.5}, {0.5, 0.5}}, ModelTag::reference);
    const auto tgt = rows({{0.25, 0.75}, {0.5, 0.5}});
    const double one = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
    CHECK(kl_loss(ref, tgt) == Approx(one / 2.0).epsilon(1e-12));
}

TEST_CASE("kl_loss: shape mismatch throws, invalid reference rows throw") {
    const auto a = rows({{0.5, 0.5}}, ModelTag::reference);
    const auto b = rows({{0.2, 0.3, 0.5}});
    CHECK_THROWS_AS(kl_loss(a, b), DimensionError);
    const auto bad = rows({{0.9, 0.9}}, ModelTag::reference);
    CHECK_THROWS_AS(kl_loss(bad, a), InputError);
}

TEST_CASE("kl_loss: nonnegative and zero on self over 1000 random distributions") {
    Rng rng(2718);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto p = random_distribution(1, 5, rng);
        const auto q = random_distribution(1, 5, rng);
        CHECK(kl_loss(p, p) == Approx(0.0).margin(1e-9));
        CHECK(kl_loss(p, q) >= -1e-12);
    }
}

TEST_CASE("ce_loss: one-hot-correct prediction is zero") {
    const auto p = rows({{0.0, 1.0, 0.0}});
    CHECK(ce_loss(p, {1}) == Approx(0.0).margin(1e-9));
}

TEST_CASE("ce_loss: uniform prediction over 10 classes is ln 10") {
    std::vector<double> uniform(10, 0.1);
    const auto p = rows({uniform});
    CHECK(ce_loss(p, {4}) == Approx(std::log(10.0)).epsilon(1e-12));
    CHECK(std::log(10.0) == Approx(2.302585).margin(1e-6));
}

TEST_CASE("ce_loss: zero probability on the true class clamps to -ln(1e-12)") {
    const auto p = rows({{1.0, 0.0}});
    CHECK(ce_loss(p, {1}) == Approx(-std::log(1e-12)).epsilon(1e-12));
    CHECK(-std::log(1e-12) == Approx(27.631).margin(1e-3));
}

TEST_CASE("ce_loss: label outside the class range is an input error") {
    const auto p = rows({{0.5, 0.5}});
    CHECK_THROWS_AS(ce_loss(p, {2}), InputError);
    CHECK_THROWS_AS(ce_loss(p, {-1}), InputError);
}

TEST_CASE("combined_loss: lambda=1 reduces to the forgetting term") {
    CHECK(combined_loss(1.0, 0.37, 99.0) == 0.37);
}

TEST_CASE("combined_loss: midpoint and equal-term cases") {
    CHECK(combined_loss(0.5, 2.0, 4.0) == Approx(3.0).epsilon(1e-15));
    CHECK(combined_loss(0.01, 1.0, 1.0) == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("combined_loss: exactly affine in lambda, tiny lambda approaches ce") {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const double lambda = std::nextafter(rng.uniform(), 1.0);
        const double kl = rng.uniform(0.0, 5.0);
        const double ce = rng.uniform(0.0, 5.0);
        CHECK(combined_loss(lambda, kl, ce) == lambda * kl + (1.0 - lambda) * ce);
    }
    CHECK(combined_loss(1e-300, 1.0, 2.5) == Approx(2.5).epsilon(1e-12));
    CHECK_THROWS_AS(combined_loss(0.0, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(combined_loss(1.5, 1.0, 1.0), ConfigError);
}

TEST_CASE("posterior: network outputs form valid rows") {
    const Network net = init_network("4-3", 5);
    Rng rng(5);
    const Tensor x = testutil::random_batch(6, 4, rng);
    const PosteriorMatrix p = posterior(net, x, ModelTag::target);
    CHECK_NOTHROW(p.validate());
    CHECK(p.tag == ModelTag::target);
}

TEST_CASE("logit gradients: kl and ce forms match their loss definitions") {
    // kl grad = (q - p)/n, ce grad = (q - onehot)/n.
    const auto ref = rows({{0.5, 0.5}}, ModelTag::reference);
    const auto tgt = rows({{0.25, 0.75}});
    const Tensor g = kl_logit_grad(ref, tgt);
    CHECK(g.at(0, 0) == Approx(-0.25).epsilon(1e-12));
    CHECK(g.at(0, 1) == Approx(0.25).epsilon(1e-12));

    const Tensor h = ce_logit_grad(tgt, {0});
    CHECK(h.at(0, 0) == Approx(0.25 - 1.0).epsilon(1e-12));
    CHECK(h.at(0, 1) == Approx(0.75).epsilon(1e-12));
}
