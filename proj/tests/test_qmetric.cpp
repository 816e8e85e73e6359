#include <catch2/catch_amalgamated.hpp>

#include "flatex/qmetric.hpp"

#include <cmath>
#include <random>

using namespace flatex;
using Catch::Approx;

TEST_CASE("Sb[1] metric average matches the closed form") {
    CHECK(sb1_metric_closed_form(1.0) == Approx(0.2236).epsilon(1e-4));
    for (double alpha : {0.1, 0.3, 0.5, 1.0, 2.0}) {
        const auto q = quantum_metric(stub(1, alpha, 0.7), 2048);
        CHECK(q.g_avg == Approx(sb1_metric_closed_form(alpha)).epsilon(5e-3));
        CHECK(q.converged());
        CHECK(q.spec.js == 0.0);
    }
}

TEST_CASE("lattice constant enters as a^2") {
    ChainSpec s = stub(1, 0.5, 0.0);
    s.a = 2.0;
    const auto q = quantum_metric(s, 1024);
    CHECK(q.g_avg == Approx(4.0 * sb1_metric_closed_form(0.5)).epsilon(5e-3));
    CHECK(q.g_avg_over_a2() == Approx(sb1_metric_closed_form(0.5)).epsilon(5e-3));
}

TEST_CASE("diamond flat band has vanishing metric") {
    for (int n : {1, 2, 4, 7}) {
        const auto q = quantum_metric(diamond(n, 0.4), 256);
        CHECK(std::abs(q.g_avg) <= 1e-10);
    }
}

TEST_CASE("sqrt of the stub metric grows as n^(3/4) at small alpha") {
    const double g8 = quantum_metric(stub(8, 0.1, 0.0), 1024).g_avg;
    const double g16 = quantum_metric(stub(16, 0.1, 0.0), 1024).g_avg;
    const double exponent = std::log(std::sqrt(g16 / g8)) / std::log(2.0);
    CHECK(exponent == Approx(0.75).margin(0.03));
}

TEST_CASE("metric is independent of eigenvector phases") {
    const ChainSpec s = stub(2, 0.4, 0.0);
    const UnitCell cell = build_unit_cell(s);
    const auto kmesh = midpoint_kmesh(s, 512);
    const auto bs = diagonalize_on_mesh(s, Spin::Up, kmesh);
    std::vector<Eigen::VectorXcd> u, signed_u, phased_u;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (const auto& v : bs.states) {
        u.push_back(v.col(bs.flat_band));
        signed_u.push_back((rng() % 2 ? -1.0 : 1.0) * u.back());
        phased_u.push_back(std::polar(1.0, phase(rng)) * u.back());
    }
    const double g0 = metric_average_from_states(cell, kmesh, u);
    CHECK(metric_average_from_states(cell, kmesh, signed_u) == Approx(g0).epsilon(1e-10));
    CHECK(metric_average_from_states(cell, kmesh, phased_u) == Approx(g0).epsilon(1e-10));
}

TEST_CASE("metric average converges under mesh doubling") {
    for (const auto& s : {stub(1, 0.1, 0.0), stub(1, 2.0, 0.0), stub(4, 0.3, 0.0), stub(10, 0.5, 0.0)}) {
        const double g1 = quantum_metric(s, 256).g_avg;
        const double g2 = quantum_metric(s, 512).g_avg;
        CHECK(std::abs(g2 - g1) / g2 <= 0.01);
    }
}

TEST_CASE("samples average to the reported mean") {
    const auto q = quantum_metric(stub(3, 0.6, 0.0), 512);
    REQUIRE(q.g_samples.size() == 512);
    double mean = 0.0;
    for (double g : q.g_samples) mean += g;
    mean /= 512.0;
    CHECK(mean == Approx(q.g_avg).epsilon(1e-12));
    for (double g : q.g_samples) CHECK(g >= -1e-12);
    CHECK(q.error_estimate <= 0.01 * q.g_avg);
}

TEST_CASE("a coarse mesh still resolves the narrow peak of a short stub") {
    // the flat-band state turns over a k window of width ~alpha around the zone edge
    const auto q = quantum_metric(stub(1, 0.01, 0.0), 64);
    CHECK(q.refined_intervals > 0);
    CHECK(q.g_avg == Approx(sb1_metric_closed_form(0.01)).epsilon(0.01));
    CHECK(quantum_metric(stub(1, 1.0, 0.0), 256).refined_intervals == 0);
}

TEST_CASE("mesh validation") {
    CHECK_THROWS_AS(quantum_metric(stub(1, 1, 0), 32), ValidationError);
    CHECK_THROWS_AS(quantum_metric(stub(1, 1, 0), 101), ValidationError);
}
