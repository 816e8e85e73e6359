#include <catch2/catch_amalgamated.hpp>

#include "flatex/asymptotics.hpp"
#include "flatex/couplings.hpp"

#include <cmath>

using namespace flatex;
using namespace flatex::asymptotic;
using Catch::Approx;

TEST_CASE("pole and flat-flat coupling") {
    CHECK(pole(0.3) == Approx(-0.74164).epsilon(1e-5));
    const auto p = stub_fbfb(0.3, 0.1, 1.0);
    CHECK(p.J == Approx(-6.05e-4).epsilon(2e-3));
    CHECK(p.valid);
    CHECK_FALSE(stub_fbfb(0.1, 1.0, 1.0).valid);
    CHECK(stub_fbfb(0.3, 0.1, -4.0).J == stub_fbfb(0.3, 0.1, 4.0).J);
}

TEST_CASE("flat-flat decay lengths") {
    CHECK(stub_fbfb_xi(0.3) == Approx(1.6725).epsilon(3e-4));
    CHECK(stub_fbfb_xi_small_alpha(0.3) == Approx(1.6667).epsilon(1e-4));
    CHECK(stub_fbfb_xi_large_alpha(2.0) == Approx(0.3607).epsilon(1e-4));
}

TEST_CASE("exact pole reduces to the small-alpha form") {
    for (double alpha : {0.05, 0.1, 0.2}) {
        CHECK(stub_fbfb_xi(alpha) == Approx(stub_fbfb_xi_small_alpha(alpha)).epsilon(0.01));
        const double exact = stub_fbfb(alpha, 0.01, 0.0).J;
        CHECK(exact == Approx(stub_fbfb_small_alpha(alpha, 0.01, 0.0)).epsilon(0.01));
    }
    // large alpha: the prefactor tends to -JS/2
    CHECK(stub_fbfb(50.0, 0.1, 0.0).J == Approx(stub_fbfb_large_alpha(50.0, 0.1, 0.0)).epsilon(2e-3));
}

TEST_CASE("dispersive regime") {
    const auto p = stub_dispersive(0.1, 1.0, 20.0);
    CHECK(p.xi == Approx(4.714).epsilon(1e-4));
    CHECK(p.valid);
    CHECK(p.J < 0.0);
    const double amp = 2.0 * std::pow(0.1, 3.5) / std::sqrt(2.0 * std::sqrt(2.0) * std::numbers::pi);
    CHECK(p.J == Approx(-amp * std::exp(-20.0 / p.xi) / std::sqrt(20.0)).epsilon(1e-12));
    CHECK(p.J == Approx(-6.82e-7).epsilon(2e-3));
    CHECK_FALSE(stub_dispersive(0.1, 1.0, 10.0).valid);
    CHECK_FALSE(stub_dispersive(0.5, 1.0, 40.0).valid);

    ComputeConfig c;
    c.num_k = 1024;
    const double numeric = coupling_band_sum(stub(1, 0.1, 1.0), {Sublattice::B, Sublattice::B}, 20.0, c).J;
    CHECK(numeric / p.J >= 1.0 / 1.5);
    CHECK(numeric / p.J <= 1.5);
}

TEST_CASE("diamond power law") {
    CHECK(diamond_powerlaw(0.5, 20.0).J == Approx(-5.97e-6).epsilon(1e-3));
    CHECK(diamond_powerlaw(1.0, 1000.0).J * 1e12 == Approx(-3.0 / (2.0 * std::numbers::pi)).epsilon(1e-12));
    CHECK(diamond_powerlaw(0.5, 300.0).J / diamond_powerlaw(1.0, 300.0).J == Approx(2.0));
    CHECK(diamond_threshold(1.0) == Approx(std::sqrt(32.0)));
    CHECK_FALSE(diamond_powerlaw(0.5, 10.0).valid);
    CHECK(diamond_powerlaw(0.5, 12.0).valid);
    CHECK(diamond_powerlaw(0.5, 12.0).exponent == 4.0);
}

TEST_CASE("decay length through the quantum metric") {
    const auto r = xi_vs_g_reference(0.5);
    CHECK(r.g_avg == Approx(0.4851).epsilon(1e-4));
    CHECK(r.xi_small == Approx(0.970).epsilon(1e-3));
    CHECK_FALSE(r.large_branch);
    CHECK(xi_vs_g_reference(2.0).large_branch);
    const auto crossover = xi_vs_g_reference(1.0);
    CHECK(std::isfinite(crossover.xi_small));
    CHECK(std::isfinite(crossover.xi_large));
    // both branches reduce to 1/(2 alpha) as alpha -> 0
    const auto tiny = xi_vs_g_reference(1e-4);
    CHECK(tiny.xi_small == Approx(1.0 / 2e-4).epsilon(1e-6));
    CHECK(tiny.xi_exact == Approx(1.0 / 2e-4).epsilon(1e-6));
    // large-alpha branch tracks the exact pole
    CHECK(xi_vs_g_reference(5.0).xi_large == Approx(xi_vs_g_reference(5.0).xi_exact).epsilon(0.01));
}
