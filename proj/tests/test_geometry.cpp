#include <doctest.h>

#include <chrono>
#include <cmath>
#include <sstream>

#include "anchorforge/errors.hpp"
#include "anchorforge/geometry.hpp"
#include "anchorforge/random.hpp"
#include "oracles.hpp"

using namespace anchorforge;

namespace {

oracle::Rect rect(const Box& b) { return {b.cx(), b.cy(), b.w(), b.h()}; }

Box random_box(Rng& rng) {
    return Box(uniform(rng, 0.0, 1.0), uniform(rng, 0.0, 1.0), uniform(rng, 0.01, 0.6), uniform(rng, 0.01, 0.6));
}

// Coordinates on a 1/1024 lattice: every corner, shift and area is exact in binary.
Box lattice_box(Rng& rng) {
    auto q = [&](std::uint64_t lo, std::uint64_t span) { return (lo + uniform_below(rng, span)) / 1024.0; };
    return Box(q(0, 1024), q(0, 1024), q(2, 400) * 2, q(2, 400) * 2);
}

}  // namespace

TEST_CASE("box rejects zero-area and non-finite input") {
    CHECK_THROWS_AS(Box(0.5, 0.5, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(Box(0.5, 0.5, 0.1, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(Box(NAN, 0.5, 0.1, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(Box(0.5, 0.5, INFINITY, 0.1), std::invalid_argument);
    const Box b(0.5, 0.4, 0.2, 0.1);
    CHECK(b.x1() < b.x2());
    CHECK(b.y1() < b.y2());
    CHECK(b.x1() == doctest::Approx(0.4));
    CHECK(b.y2() == doctest::Approx(0.45));
}

TEST_CASE("iou examples") {
    const Box a(0.5, 0.5, 0.2, 0.2);
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(Box(0.1, 0.1, 0.1, 0.1), Box(0.8, 0.8, 0.1, 0.1)) == 0.0);
    // intersection 1, union 4 + 4 - 1
    const double v = iou(Box::from_corners(0, 0, 2, 2), Box::from_corners(1, 1, 3, 3));
    CHECK(v == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    // touching edges share no interior
    CHECK(iou(Box::from_corners(0, 0, 1, 1), Box::from_corners(1, 0, 2, 1)) == 0.0);
}

TEST_CASE("iou properties over random pairs") {
    Rng rng(11);
    for (int i = 0; i < 20000; ++i) {
        const Box a = random_box(rng), b = random_box(rng);
        const double ab = iou(a, b);
        CHECK_MESSAGE(ab == iou(b, a), "symmetry");
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        REQUIRE(iou(a, a) == 1.0);
        REQUIRE(ab == doctest::Approx(oracle::iou(rect(a), rect(b))).epsilon(1e-12));

        const double c = uniform(rng, 0.1, 10.0);
        const Box sa = Box::from_corners(a.x1() * c, a.y1() * c, a.x2() * c, a.y2() * c);
        const Box sb = Box::from_corners(b.x1() * c, b.y1() * c, b.x2() * c, b.y2() * c);
        REQUIRE(std::abs(iou(sa, sb) - ab) <= 1e-12);
    }
}

TEST_CASE("iou is exactly translation invariant on a dyadic lattice") {
    Rng rng(12);
    for (int i = 0; i < 10000; ++i) {
        const Box a = lattice_box(rng), b = lattice_box(rng);
        const double dx = (static_cast<double>(uniform_below(rng, 2048)) - 1024.0) / 1024.0;
        const double dy = (static_cast<double>(uniform_below(rng, 2048)) - 1024.0) / 1024.0;
        const Box ta(a.cx() + dx, a.cy() + dy, a.w(), a.h());
        const Box tb(b.cx() + dx, b.cy() + dy, b.w(), b.h());
        REQUIRE(iou(ta, tb) == iou(a, b));
    }
}

TEST_CASE("iou_matrix") {
    const std::vector<Box> one{Box(0.3, 0.3, 0.2, 0.2)};
    auto m = iou_matrix(one, one);
    CHECK(m.rows() == 1);
    CHECK(m.cols() == 1);
    CHECK(m(0, 0) == 1.0);

    auto empty = iou_matrix(one, std::vector<Box>{});
    CHECK(empty.rows() == 1);
    CHECK(empty.cols() == 0);

    SUBCASE("full grid against one ground truth, any worker count") {
        const auto grid = generate_anchors(AnchorConfig::standard());
        const std::vector<Box> gt{Box(0.43, 0.61, 0.21, 0.17)};
        const auto m1 = iou_matrix(grid.boxes, gt, 1);
        const auto m4 = iou_matrix(grid.boxes, gt, 4);
        REQUIRE(m1.rows() == 9216);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            REQUIRE(m1(i, 0) == iou(grid.boxes[i], gt[0]));
            REQUIRE(m4(i, 0) == m1(i, 0));
        }
    }
}

TEST_CASE("generate_anchors counts and layout") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto grid = generate_anchors(AnchorConfig::standard());
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(grid.size() == 9216);
    CHECK(secs < 1.0);

    const auto single = generate_anchors({{0.5}, {1.0}, 1, 1});
    REQUIRE(single.size() == 1);
    CHECK(single.boxes[0] == Box(0.5, 0.5, 0.5, 0.5));

    CHECK(generate_anchors({{0.1, 0.2}, {2, 1, 0.5}, 4, 4}).size() == 96);

    // order: cell row-major, then scale, then ratio
    const auto small = generate_anchors({{0.1, 0.2}, {2, 0.5}, 2, 3});
    CHECK(small.index(1, 2, 1, 0) == ((1 * 3 + 2) * 2 + 1) * 2 + 0);
    const Box& b = small.boxes[small.index(1, 2, 1, 0)];
    CHECK(b.cx() == doctest::Approx(2.5 / 3));
    CHECK(b.cy() == doctest::Approx(0.75));
    CHECK(b.w() / b.h() == doctest::Approx(2.0));

    // anchors are not clipped
    CHECK(grid.boxes[0].x1() < 0.0);
}

TEST_CASE("generate_anchors rejects invalid configs") {
    CHECK_THROWS_AS(generate_anchors({{}, {1.0}, 2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(generate_anchors({{0.1}, {}, 2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(generate_anchors({{0.1}, {1.0}, 0, 2}), std::invalid_argument);
    CHECK_THROWS_AS(generate_anchors({{0.1}, {1.0}, 2, 0}), std::invalid_argument);
    CHECK_THROWS_AS(generate_anchors({{1.5}, {1.0}, 2, 2}), std::invalid_argument);
    CHECK_THROWS_AS(generate_anchors({{0.1}, {-1.0}, 2, 2}), std::invalid_argument);
}

TEST_CASE("anchor shape invariants across configs") {
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
        AnchorConfig cfg;
        const auto ns = 1 + uniform_below(rng, 4), nr = 1 + uniform_below(rng, 4);
        for (std::uint64_t i = 0; i < ns; ++i) cfg.scales.push_back(uniform(rng, 0.01, 1.0));
        for (std::uint64_t i = 0; i < nr; ++i) cfg.ratios.push_back(uniform(rng, 0.2, 5.0));
        cfg.grid_rows = 1 + static_cast<int>(uniform_below(rng, 8));
        cfg.grid_cols = 1 + static_cast<int>(uniform_below(rng, 8));
        const auto grid = generate_anchors(cfg);
        REQUIRE(grid.size() == cfg.grid_rows * cfg.grid_cols * ns * nr);
        for (int i = 0; i < cfg.grid_rows; ++i)
            for (int j = 0; j < cfg.grid_cols; ++j)
                for (std::size_t s = 0; s < ns; ++s)
                    for (std::size_t r = 0; r < nr; ++r) {
                        const Box& b = grid.boxes[grid.index(i, j, s, r)];
                        REQUIRE(std::abs(b.w() / b.h() - cfg.ratios[r]) <= 1e-12 * cfg.ratios[r]);
                        REQUIRE(std::abs(b.w() * b.h() - cfg.scales[s] * cfg.scales[s]) <= 1e-12);
                    }
    }
}

TEST_CASE("coverage_report") {
    const auto cfg = AnchorConfig::standard();
    const auto grid = generate_anchors(cfg);
    const auto oracle_anchors = oracle::anchors(cfg.scales, cfg.ratios, cfg.grid_rows, cfg.grid_cols);

    SUBCASE("ground truth equal to an anchor") {
        const std::vector<Box> gt{grid.boxes[1234]};
        for (const auto& row : coverage_report(grid, gt, kDefaultCoverageThresholds)) CHECK(row.fraction == 1.0);
    }
    SUBCASE("tiny box is never covered") {
        const std::vector<Box> gt{Box(0.5, 0.5, 0.001, 0.001)};
        CHECK(oracle::best_iou(oracle_anchors, {0.5, 0.5, 0.001, 0.001}) < 0.3);
        for (const auto& row : coverage_report(grid, gt, kDefaultCoverageThresholds)) CHECK(row.fraction == 0.0);
    }
    SUBCASE("squares of side 0.175 on cell centers") {
        std::vector<Box> gt;
        for (int i = 0; i < 32; i += 3)
            for (int j = 0; j < 32; j += 5) {
                gt.emplace_back((j + 0.5) / 32, (i + 0.5) / 32, 0.175, 0.175);
                REQUIRE(oracle::best_iou(oracle_anchors, {(j + 0.5) / 32, (i + 0.5) / 32, 0.175, 0.175}) > 0.5);
            }
        const double t[] = {0.5};
        CHECK(coverage_report(grid, gt, t)[0].fraction == 1.0);
    }
    SUBCASE("random boxes match the brute-force oracle and are monotone") {
        Rng rng(21);
        std::vector<Box> gt;
        for (int i = 0; i < 60; ++i)
            gt.emplace_back(uniform(rng, 0.1, 0.9), uniform(rng, 0.1, 0.9), uniform(rng, 0.02, 0.5), uniform(rng, 0.02, 0.5));
        const double t[] = {0.1, 0.3, 0.5, 0.6, 0.75, 0.9};
        const auto rows = coverage_report(grid, gt, t, 3);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            std::size_t expected = 0;
            for (const auto& g : gt) expected += oracle::best_iou(oracle_anchors, {g.cx(), g.cy(), g.w(), g.h()}) > t[k];
            CHECK(rows[k].covered == expected);
            if (k > 0) CHECK(rows[k].fraction <= rows[k - 1].fraction);
        }
    }
    SUBCASE("no ground truths") {
        CHECK_THROWS_AS(coverage_report(grid, {}, kDefaultCoverageThresholds), DataError);
    }
}

TEST_CASE("anchor CSV roundtrip") {
    const auto grid = generate_anchors({{0.1, 0.3}, {2, 1}, 3, 2});
    std::stringstream ss;
    write_anchor_csv(ss, grid);
    const std::string text = ss.str();
    CHECK(text.rfind("index,cx,cy,w,h\n0,", 0) == 0);
    const auto back = read_anchor_csv(ss);
    CHECK(back.boxes == grid.boxes);

    std::stringstream bad("index,cx,cy,w,h\n0,0.5,0.5,0,0.1\n");
    CHECK_THROWS_AS(read_anchor_csv(bad), DataError);
    std::stringstream no_header("0,0.5,0.5,0.1,0.1\n");
    CHECK_THROWS_AS(read_anchor_csv(no_header), DataError);
}
