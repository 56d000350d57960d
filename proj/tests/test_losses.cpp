#include <doctest.h>

#include <cmath>

#include "anchorforge/errors.hpp"
#include "anchorforge/losses.hpp"
#include "anchorforge/random.hpp"
#include "gradcheck.hpp"

using namespace anchorforge;

namespace {

const double kLn2 = std::log(2.0);

ScoredBatch probs(std::vector<std::uint8_t> y, std::vector<double> p) {
    return ScoredBatch::from_probabilities(std::move(y), std::move(p));
}

ScoredBatch logits(std::vector<std::uint8_t> y, std::vector<double> z) {
    return ScoredBatch::from_logits(std::move(y), std::move(z));
}

}  // namespace

TEST_CASE("scored batch validation") {
    CHECK_THROWS_AS(probs({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(probs({1, 0}, {0.5}), ShapeMismatch);
    CHECK_THROWS_AS(probs({2}, {0.5}), std::invalid_argument);
    CHECK_THROWS_AS(probs({1}, {1.5}), std::invalid_argument);
    CHECK_THROWS_AS(logits({1}, {NAN}), std::invalid_argument);
    const auto b = probs({1, 0, 0}, {0.9, 0.2, 0.6});
    CHECK(b.positives() == 1);
    CHECK(b.negatives() == 2);
}

TEST_CASE("bce examples") {
    CHECK(bce(probs({1}, {1.0})).value == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(bce(logits({1}, {40.0})).value < 1e-17);
    CHECK(bce(probs({1}, {0.5})).value == doctest::Approx(kLn2).epsilon(1e-15));
    CHECK(bce(logits({0}, {0.0})).value == doctest::Approx(kLn2).epsilon(1e-15));
    // stable form holds for large logits
    CHECK(bce(logits({0}, {800.0})).value == doctest::Approx(800.0));
    CHECK(bce(logits({1}, {-800.0})).value == doctest::Approx(800.0));
    CHECK(std::isfinite(bce(probs({1}, {0.0})).value));
}

TEST_CASE("weighted bce examples") {
    const auto w = ClassWeights::from_labels(std::vector<std::uint8_t>{0, 0, 0, 1});
    CHECK(w.w_pos == 0.75);
    CHECK(w.w_neg == 0.25);

    const auto r = weighted_bce(probs({1}, {0.5}), ClassWeights{0.75, 0.25});
    CHECK(r.value == doctest::Approx(0.5198603854199589).epsilon(1e-15));

    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
        std::vector<std::uint8_t> y(10);
        std::vector<double> z(10);
        for (int i = 0; i < 10; ++i) {
            y[i] = static_cast<std::uint8_t>(uniform_below(rng, 2));
            z[i] = uniform(rng, -5, 5);
        }
        const auto b = logits(y, z);
        const auto unit = weighted_bce(b, ClassWeights{1, 1});
        const auto plain = bce(b);
        REQUIRE(unit.value == plain.value);
        REQUIRE(*unit.gradient == *plain.gradient);
    }
    CHECK_THROWS_AS(weighted_bce(probs({1}, {0.5}), ClassWeights{-1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(weighted_bce(probs({1}, {0.5}), ClassWeights{0, 0}), std::invalid_argument);
}

TEST_CASE("focal loss examples") {
    CHECK(focal_loss(probs({1}, {1.0})).value == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(focal_loss(probs({1}, {0.5})).value == doctest::Approx(0.01732867951399863).epsilon(1e-15));
    CHECK_THROWS_AS(focal_loss(probs({1}, {0.5}), 1.5, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(focal_loss(probs({1}, {0.5}), 0.1, -1.0), std::invalid_argument);

    Rng rng(6);
    for (int t = 0; t < 500; ++t) {
        const std::uint8_t y = static_cast<std::uint8_t>(uniform_below(rng, 2));
        const bool use_logits = t % 2 == 0;
        const double s = use_logits ? uniform(rng, -8, 8) : uniform(rng, 0.0, 1.0);
        const auto b = use_logits ? logits({y}, {s}) : probs({y}, {s});
        REQUIRE(focal_loss(b, 0.5, 0.0, Reduction::sum).value == 0.5 * bce(b, Reduction::sum).value);
        REQUIRE(focal_loss(b, 0.5, 0.0).value == 0.5 * bce(b).value);
    }
}

TEST_CASE("regression loss examples") {
    const std::vector<OffsetVector> zero{{0, 0, 0, 0}};
    const std::vector<OffsetVector> a{{0.25, 0, 0.6931, 0}};
    CHECK(mse(a, a).value == 0.0);
    CHECK(mse(std::vector<OffsetVector>{{1, 1, 1, 1}}, zero).value == 1.0);
    // (0.0625 + 0.6931^2) / 4
    CHECK(mse(a, zero).value == doctest::Approx(0.13572190250000002).epsilon(1e-15));

    CHECK(smooth_l1(zero, zero).value == 0.0);
    CHECK(smooth_l1(std::vector<OffsetVector>{{0.5, 0.5, 0.5, 0.5}}, zero).value == 0.125);
    CHECK(smooth_l1(std::vector<OffsetVector>{{2, 2, 2, 2}}, zero).value == 1.5);
    CHECK(smooth_l1(std::vector<OffsetVector>{{2, -2, 2, -2}}, zero, 1.0, Reduction::sum).value == 6.0);

    CHECK_THROWS_AS(mse(std::vector<OffsetVector>{}, std::vector<OffsetVector>{}), std::invalid_argument);
    CHECK_THROWS_AS(mse(a, std::vector<OffsetVector>{{}, {}}), ShapeMismatch);
    CHECK_THROWS_AS(smooth_l1(a, zero, 0.0), std::invalid_argument);
}

TEST_CASE("smooth_l1 is C1 at the kink") {
    for (double beta : {0.25, 1.0, 3.0}) {
        const std::vector<OffsetVector> zero{{0, 0, 0, 0}};
        const std::vector<OffsetVector> below{{beta - 1e-9, 0, 0, 0}};
        const std::vector<OffsetVector> above{{beta + 1e-9, 0, 0, 0}};
        const auto lo = smooth_l1(below, zero, beta, Reduction::sum);
        const auto hi = smooth_l1(above, zero, beta, Reduction::sum);
        CHECK(std::abs(lo.value - hi.value) < 1e-8);
        CHECK(std::abs((*lo.gradient)[0] - (*hi.gradient)[0]) < 1e-8);
        CHECK(hi.value == doctest::Approx(0.5 * beta));
    }
}

TEST_CASE("gradient examples") {
    const auto g = gradient(LossKind::bce, logits({1}, {0.0}));
    REQUIRE(g.size() == 1);
    CHECK(g[0] == -0.5);
    const auto m = gradient(LossKind::mse, std::vector<OffsetVector>{{1, 0, 0, 0}}, std::vector<OffsetVector>{{}});
    CHECK(m == std::vector<double>{0.5, 0, 0, 0});
    CHECK_THROWS_AS(evaluate(LossKind::mse, logits({1}, {0.0})), std::invalid_argument);
    CHECK_THROWS_AS(gradient(LossKind::bce, std::vector<OffsetVector>{{}}, std::vector<OffsetVector>{{}}),
                    std::invalid_argument);
}

TEST_CASE("losses are nonnegative and permutation invariant") {
    Rng rng(9);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + uniform_below(rng, 30);
        std::vector<std::uint8_t> y(n);
        std::vector<double> z(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<std::uint8_t>(uniform_below(rng, 2));
            z[i] = uniform(rng, -6, 6);
        }
        const auto perm = permutation(n, rng);
        std::vector<std::uint8_t> py(n);
        std::vector<double> pz(n);
        for (std::size_t i = 0; i < n; ++i) {
            py[i] = y[perm[i]];
            pz[i] = z[perm[i]];
        }
        for (auto kind : {LossKind::bce, LossKind::weighted_bce, LossKind::focal}) {
            const double v = evaluate(kind, logits(y, z)).value;
            REQUIRE(v >= 0.0);
            REQUIRE(evaluate(kind, logits(py, pz)).value == doctest::Approx(v).epsilon(1e-12));
        }
    }
}

TEST_CASE("loss kind names") {
    for (auto kind : {LossKind::bce, LossKind::weighted_bce, LossKind::focal, LossKind::mse, LossKind::smooth_l1})
        CHECK(parse_loss_kind(loss_kind_name(kind)) == kind);
    CHECK_FALSE(parse_loss_kind("hinge").has_value());
}

TEST_CASE("analytic gradients match central differences") {
    for (auto kind : {LossKind::bce, LossKind::weighted_bce, LossKind::focal, LossKind::mse, LossKind::smooth_l1}) {
        const auto out = gradcheck::run(kind, 1000, 100 + static_cast<std::uint64_t>(kind));
        INFO(loss_kind_name(kind), " worst relative error ", out.worst);
        CHECK(out.points == 1000);
        CHECK(out.worst < gradcheck::kTolerance);
    }
}
