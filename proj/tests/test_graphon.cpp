#include <cmath>
#include <vector>

#include "doctest.h"
#include "ggame/errors.hpp"
#include "ggame/graphon.hpp"
#include "ggame/numerics.hpp"

using namespace ggame;

namespace {

Graphon cities_lockdown() {
    return Graphon::block(SquareMatrix::from_rows({{0.3, 0.3, 0.3}, {0.3, 1.0, 0.7}, {0.3, 0.7, 1.0}}),
                          {0.4, 0.2, 0.4});
}

std::vector<Graphon> assorted() {
    SquareMatrix grid(5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) grid(i, j) = std::exp(-std::abs(double(i) - double(j)) / 3.0);
    return {cities_lockdown(), Graphon::power_law(-0.2), Graphon::power_law(0.0),
            Graphon::constant(0.35), Graphon::tabulated(grid)};
}

}  // namespace

TEST_CASE("eval examples") {
    CHECK(Graphon::constant(0.5).eval(0.3, 0.9) == 0.5);
    CHECK(Graphon::power_law(-0.2).eval(1.0, 1.0) == 1.0);
    const Graphon w = cities_lockdown();
    CHECK(w.eval(0.5, 0.8) == 0.7);  // block 2 (0.4..0.6) vs block 3
    CHECK(w.block_of(0.0) == 0);
    CHECK(w.block_of(0.4) == 1);
    CHECK(w.block_of(0.61) == 2);
    CHECK(w.block_of(0.59) == 1);
    CHECK(w.block_of(1.0) == 2);
}

TEST_CASE("eval rejects indices off [0,1]") {
    CHECK_THROWS_AS(Graphon::constant(1.0).eval(-0.1, 0.5), DomainError);
    CHECK_THROWS_AS(Graphon::power_law(-0.2).eval(0.5, 1.2), DomainError);
}

TEST_CASE("power law at the origin") {
    CHECK(Graphon::power_law(-0.2).eval(0.0, 0.7) == 0.0);
    CHECK(Graphon::power_law(0.0).eval(0.0, 0.7) == 1.0);
}

TEST_CASE("construction validates") {
    CHECK_THROWS_AS(Graphon::block(SquareMatrix::from_rows({{1.0, 0.2}, {0.3, 1.0}}), {0.5, 0.5}),
                    ValidationError);
    CHECK_THROWS_AS(Graphon::block(SquareMatrix::from_rows({{1.0, 0.2}, {0.2, 1.0}}), {0.5, 0.6}),
                    ValidationError);
    CHECK_THROWS_AS(Graphon::block(SquareMatrix::from_rows({{1.5}}), {1.0}), ValidationError);
    CHECK_THROWS_AS(Graphon::power_law(0.1), ValidationError);
    CHECK_THROWS_AS(Graphon::constant(1.1), ValidationError);
}

TEST_CASE("symmetry on a grid of points") {
    RngStream rng(3, 0);
    for (const Graphon& w : assorted()) {
        for (int i = 0; i < 2000; ++i) {
            const double x = rng.uniform(), y = rng.uniform();
            const double a = w.eval(x, y), b = w.eval(y, x);
            if (std::holds_alternative<TabulatedKernel>(w.kernel()))
                CHECK(std::abs(a - b) <= 1e-12);
            else
                CHECK(a == b);
            CHECK(a >= 0.0);
            CHECK(a <= 1.0);
        }
    }
}

TEST_CASE("l2 norm examples") {
    CHECK(Graphon::constant(0.7).l2_norm() == doctest::Approx(0.7));
    // direct double sum: 0.336
    CHECK(cities_lockdown().l2_norm() == doctest::Approx(std::sqrt(0.336)).epsilon(1e-12));
    CHECK(std::sqrt(0.336) == doctest::Approx(0.5797).epsilon(1e-4));
    CHECK(Graphon::block(SquareMatrix(2, 0.0), {0.5, 0.5}).l2_norm() == 0.0);
    // analytic: int int (xy)^(0.4) = (1/1.4)^2
    CHECK(Graphon::power_law(-0.2).l2_norm() == doctest::Approx(1.0 / 1.4).epsilon(1e-5));
}

TEST_CASE("block l2 norm matches fine midpoint quadrature of the step kernel") {
    // Block edges on the quadrature cell edges; otherwise the step kernel's
    // midpoint error is first order in the cell width.
    const Graphon w = Graphon::block(
        SquareMatrix::from_rows({{0.3, 0.3, 0.3}, {0.3, 1.0, 0.7}, {0.3, 0.7, 1.0}}), {0.375, 0.25, 0.375});
    const double quad = std::sqrt(midpoint_quadrature_2d(
        [&](double x, double y) {
            const double v = w.eval(x, y);
            return v * v;
        },
        2048));
    CHECK(std::abs(quad - w.l2_norm()) <= 1e-6);
}

TEST_CASE("aggregate_block examples") {
    const SquareMatrix one = SquareMatrix::from_rows({{1.0}});
    CHECK(aggregate_block(one, std::vector{1.0}, std::vector{0.5})[0] == 0.5);

    const SquareMatrix ages = SquareMatrix::from_rows(
        {{1.0, 0.9, 0.8, 0.7}, {0.9, 0.9, 0.8, 0.8}, {0.8, 0.8, 0.9, 0.8}, {0.7, 0.8, 0.8, 0.8}});
    const std::vector<double> masses{0.27, 0.33, 0.27, 0.13};
    const auto out = aggregate_block(ages, masses, std::vector<double>(4, 1.0));
    CHECK(out[0] == doctest::Approx(0.27 + 0.297 + 0.216 + 0.091).epsilon(1e-14));
    CHECK(out[0] == doctest::Approx(0.874));

    for (double v : aggregate_block(ages, masses, std::vector<double>(4, 0.0))) CHECK(v == 0.0);
    CHECK_THROWS_AS(aggregate_block(ages, masses, std::vector<double>(3, 1.0)), DimensionError);
}

TEST_CASE("aggregate_sampled examples") {
    const std::vector<double> idx{0.1, 0.4, 0.9}, vals(3, 0.25);
    CHECK(aggregate_sampled(Graphon::constant(1.0), idx, vals, 0.7) == doctest::Approx(0.25));
    CHECK(aggregate_sampled(Graphon::power_law(0.0), idx, vals, 0.7) == doctest::Approx(0.25));
    CHECK(aggregate_sampled(Graphon::constant(0.5), std::vector{0.2, 0.8}, std::vector{0.2, 0.6},
                            0.5) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK_THROWS_AS(aggregate_sampled(Graphon::constant(0.5), std::vector<double>{},
                                      std::vector<double>{}, 0.5),
                    DimensionError);
}

TEST_CASE("constant kernel aggregate is p times the mean") {
    RngStream rng(11, 0);
    std::vector<double> idx(300), vals(300);
    double mean = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        idx[j] = rng.uniform();
        vals[j] = rng.uniform() * 3.0 - 1.0;
        mean += vals[j] / 300.0;
    }
    CHECK(aggregate_sampled(Graphon::constant(0.6), idx, vals, 0.3) == doctest::Approx(0.6 * mean).epsilon(1e-13));
}

TEST_CASE("structured all-index aggregate agrees with the direct sum") {
    RngStream rng(5, 1);
    std::vector<double> idx(97), vals(97);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        idx[j] = rng.uniform();
        vals[j] = rng.uniform();
    }
    for (const Graphon& w : assorted()) {
        const auto all = aggregate_sampled_all(w, idx, vals);
        for (std::size_t i = 0; i < idx.size(); ++i)
            CHECK(std::abs(all[i] - aggregate_sampled(w, idx, vals, idx[i])) <= 1e-14);
    }
}

TEST_CASE("stratified sampling reproduces the block aggregate") {
    const Graphon w = Graphon::block(
        SquareMatrix::from_rows({{1.0, 0.9, 0.8, 0.7}, {0.9, 0.9, 0.8, 0.8}, {0.8, 0.8, 0.9, 0.8}, {0.7, 0.8, 0.8, 0.8}}),
        {0.27, 0.33, 0.27, 0.13});
    const std::vector<double> block_values{0.3, 0.1, 0.7, 0.5};
    const auto exact = aggregate_block(w.as_block()->weights, w.as_block()->masses, block_values);
    // 100 indices at the cell midpoints: block sizes 27, 33, 27, 13.
    std::vector<double> idx(100), vals(100);
    for (std::size_t j = 0; j < 100; ++j) {
        idx[j] = (j + 0.5) / 100.0;
        vals[j] = block_values[w.block_of(idx[j])];
    }
    for (std::size_t j = 0; j < 100; ++j)
        CHECK(std::abs(aggregate_sampled(w, idx, vals, idx[j]) - exact[w.block_of(idx[j])]) <= 1e-12);
}

TEST_CASE("existence margin examples") {
    CHECK(existence_margin(Graphon::constant(0.0), 1.0, 50.0) == 0.0);
    const Graphon w = Graphon::block(SquareMatrix::from_rows({{0.3, 0.3, 0.3}, {0.3, 1.0, 0.7}, {0.3, 0.7, 1.0}}),
                                     {0.4, 0.2, 0.4});
    CHECK(existence_margin(w, 1.0, 0.5) == doctest::Approx(0.2899).epsilon(1e-3));
    CHECK(existence_margin(Graphon::constant(1.0), 1.0, 2.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(existence_margin(w, -1.0, 0.5), DomainError);
}
