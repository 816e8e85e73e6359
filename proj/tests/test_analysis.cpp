#include <catch2/catch_amalgamated.hpp>

#include "flatex/analysis.hpp"
#include "flatex/asymptotics.hpp"

#include <cmath>

using namespace flatex;
using Catch::Approx;

namespace {

std::vector<double> grid(double lo, double step, int count) {
    std::vector<double> r;
    for (int i = 0; i < count; ++i) r.push_back(lo + step * i);
    return r;
}

ComputeConfig with_num_k(int n) {
    ComputeConfig c;
    c.num_k = n;
    return c;
}

XiVsGRow synthetic_row(int n, double g, std::optional<double> slope) {
    XiVsGRow r;
    r.n = n;
    r.g_avg = g;
    r.fit = FitResult{};
    r.local_slope = slope;
    return r;
}

} // namespace

TEST_CASE("exponential fit recovers synthetic data") {
    const auto R = grid(3, 1, 20);
    std::vector<double> J;
    for (double r : R) J.push_back(-2.5e-3 * std::exp(-r / 1.7));
    const auto f = fit_points(R, J, FitModel::Exponential);
    CHECK(f.xi == Approx(1.7).epsilon(1e-10));
    CHECK(f.amplitude == Approx(-2.5e-3).epsilon(1e-10));
    CHECK(f.r_squared == Approx(1.0));
    CHECK(f.accepted);
    CHECK(f.points == 20);

    // refitting the fitted curve is idempotent
    std::vector<double> Jfit;
    for (double r : R) Jfit.push_back(f.amplitude * std::exp(-r / f.xi));
    const auto g = fit_points(R, Jfit, FitModel::Exponential);
    CHECK(g.xi == Approx(f.xi).epsilon(1e-10));
    CHECK(g.amplitude == Approx(f.amplitude).epsilon(1e-10));
}

TEST_CASE("power-law and sqrt-corrected fits recover synthetic data") {
    const auto R = grid(10, 5, 30);
    std::vector<double> Jp, Js;
    for (double r : R) {
        Jp.push_back(-0.48 / std::pow(r, 4));
        Js.push_back(-1e-4 * std::exp(-r / 4.5) / std::sqrt(r));
    }
    const auto p = fit_points(R, Jp, FitModel::PowerLaw);
    CHECK(p.exponent == Approx(4.0).epsilon(1e-10));
    CHECK(p.amplitude == Approx(-0.48).epsilon(1e-10));
    const auto s = fit_points(R, Js, FitModel::ExponentialSqrtR);
    CHECK(s.xi == Approx(4.5).epsilon(1e-10));
    CHECK(s.amplitude == Approx(-1e-4).epsilon(1e-10));
}

TEST_CASE("constant couplings give an infinite decay length") {
    const auto R = grid(1, 1, 6);
    const std::vector<double> J(6, -1e-3);
    const auto f = fit_points(R, J, FitModel::Exponential);
    CHECK(std::isinf(f.xi));
}

TEST_CASE("invalid fit inputs raise") {
    const auto R = grid(1, 1, 6);
    std::vector<double> grow{-1e-3, -2e-3, -1e-4, -1e-5, -1e-6, -1e-7};
    CHECK_THROWS_AS(fit_points(R, grow, FitModel::Exponential), FitError);
    std::vector<double> flip{-1e-3, 1e-4, -1e-5, -1e-6, -1e-7, -1e-8};
    CHECK_THROWS_AS(fit_points(R, flip, FitModel::Exponential), FitError);
    CHECK_THROWS_AS(fit_points(grid(1, 1, 4), {1e-3, 1e-4, 1e-5, 1e-6}, FitModel::Exponential), FitError);
    CHECK_THROWS_AS(fit_points({1, 3, 2, 4, 5}, {1e-3, 1e-4, 1e-5, 1e-6, 1e-7}, FitModel::Exponential), FitError);
    CHECK_THROWS_AS(fit_points(R, {1e-3}, FitModel::Exponential), ValidationError);
    CHECK_THROWS_AS(parse_fit_model("gaussian"), ValidationError);
    CHECK(parse_fit_model("power") == FitModel::PowerLaw);
    CHECK(parse_fit_model("exp_sqrt") == FitModel::ExponentialSqrtR);
}

TEST_CASE("fit on a JS = 0 curve has no points") {
    const auto table = coupling_curve(stub(1, 0.3, 0.0), {Sublattice::B, Sublattice::B}, 10.0, with_num_k(64));
    CHECK_THROWS_AS(fit_decay(table, FitModel::Exponential), FitError);
}

TEST_CASE("Sb[1] flat-flat decay length from the band sum") {
    for (double alpha : {0.1, 0.2, 0.3}) {
        const double js = alpha / 10.0;
        const auto table = coupling_curve(stub(1, alpha, js), {Sublattice::B, Sublattice::B}, 40.0, with_num_k(256));
        const auto f = fit_decay(table, FitModel::Exponential);
        CHECK(f.xi == Approx(asymptotic::stub_fbfb_xi(alpha)).epsilon(0.03));
        CHECK(f.accepted);
        CHECK(f.r_min >= 3.0);
    }
    const auto table = coupling_curve(stub(1, 0.3, 0.01), {Sublattice::B, Sublattice::B}, 40.0, with_num_k(256));
    const auto f = fit_decay(table, FitModel::Exponential);
    CHECK(f.xi == Approx(1.6725).epsilon(0.03));
    CHECK(f.amplitude == Approx(asymptotic::stub_fbfb(0.3, 0.01, 0.0).J).epsilon(0.1));
}

TEST_CASE("fit window options restrict the points") {
    const auto table = coupling_curve(stub(1, 0.3, 0.01), {Sublattice::B, Sublattice::B}, 40.0, with_num_k(256));
    FitOptions o;
    o.r_min = 5.0;
    o.r_max = 12.0;
    const auto f = fit_decay(table, FitModel::Exponential, o);
    CHECK(f.r_min == 5.0);
    CHECK(f.r_max == 12.0);
    CHECK(f.points == 8);
}

TEST_CASE("Dd[1] couplings follow an R^-4 power law") {
    const auto table = coupling_curve(diamond(1, 1.0), {Sublattice::B, Sublattice::B}, 200.0, with_num_k(2048));
    FitOptions o;
    o.r_min = 100.0;
    const auto f = fit_decay(table, FitModel::PowerLaw, o);
    CHECK(f.exponent == Approx(4.0).margin(0.1));
    CHECK(f.amplitude < 0.0);
}

TEST_CASE("decay length tracks the metric at large alpha") {
    StudyConfig cfg;
    cfg.max_cells = 12;
    const auto rows = xi_vs_g_study(2.0, {1}, 0.1, cfg);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].fit);
    const auto ref = asymptotic::xi_vs_g_reference(2.0);
    CHECK(rows[0].g_avg == Approx(ref.g_avg).epsilon(5e-3));
    CHECK(rows[0].xi() == Approx(ref.xi_selected()).epsilon(0.05));
}

TEST_CASE("study rows carry local slopes") {
    StudyConfig cfg;
    cfg.compute.num_k = 128;
    cfg.max_cells = 30;
    cfg.metric_num_k = 512;
    const auto rows = xi_vs_g_study(0.3, {1, 2, 3}, 0.1, cfg);
    REQUIRE(rows.size() == 3);
    CHECK_FALSE(rows[0].local_slope);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].local_slope);
        CHECK(rows[i].g_avg > rows[i - 1].g_avg);
        CHECK(rows[i].xi() > rows[i - 1].xi());
    }
    CHECK(scaling_slope(rows, 1, 3).has_value());
    CHECK_FALSE(scaling_slope(rows, 3, 3).has_value());
    CHECK_THROWS_AS(xi_vs_g_study(0.3, {2, 1}, 0.1, cfg), ValidationError);
}

TEST_CASE("crossover detection on synthetic slopes") {
    std::vector<XiVsGRow> rows;
    rows.push_back(synthetic_row(1, 1, std::nullopt));
    for (int n = 2; n <= 9; ++n) rows.push_back(synthetic_row(n, n, 1.0 / 3.0));
    for (int n = 10; n <= 15; ++n) rows.push_back(synthetic_row(n, n, 0.5));
    const auto est = detect_nc(rows);
    REQUIRE(est.n_c);
    CHECK(*est.n_c == 10);

    std::vector<XiVsGRow> flat{synthetic_row(1, 1, std::nullopt), synthetic_row(2, 2, 0.34), synthetic_row(3, 3, 0.35)};
    const auto none = detect_nc(flat);
    CHECK_FALSE(none.n_c);
    CHECK_FALSE(none.note.empty());

    std::vector<XiVsGRow> high{synthetic_row(1, 1, std::nullopt), synthetic_row(2, 2, 0.5), synthetic_row(3, 3, 0.5)};
    CHECK_FALSE(detect_nc(high).n_c);
}

TEST_CASE("amplification scan") {
    const auto s = amplification_scan({0.3}, {0.1, 0.3}, with_num_k(64), 1.0);
    REQUIRE(s.cells.size() == 2);
    const auto& c = s.at(0, 0);
    CHECK(c.j1_a == Approx(-5.025e-4).epsilon(5e-3));
    CHECK(c.j10_a10 == Approx(-7.64e-4).epsilon(5e-3));
    REQUIRE(c.ratio);
    CHECK(*c.ratio == Approx(c.j10_a10 / c.j1_a));
    REQUIRE(c.ratio_same_distance);
    CHECK(*c.ratio_same_distance > 100.0);
    REQUIRE(c.j1_10a_kelvin);
    CHECK(*c.j1_10a_kelvin == Approx(c.j1_10a * kelvin_per_ev));
    CHECK(s.at(0, 1).js == 0.3);
}

TEST_CASE("ratios are null once the couplings fall below the floor") {
    const auto s = amplification_scan({0.3}, {1e-13}, with_num_k(64));
    CHECK_FALSE(s.at(0, 0).ratio);
    CHECK_FALSE(s.at(0, 0).ratio_same_distance);
    CHECK_FALSE(s.at(0, 0).j1_10a_kelvin);
}

TEST_CASE("scan validation") {
    CHECK_THROWS_AS(amplification_scan({}, {0.1}, with_num_k(64)), ValidationError);
    CHECK_THROWS_AS(amplification_scan({0.0}, {0.1}, with_num_k(64)), ValidationError);
    CHECK_THROWS_AS(amplification_scan({0.3}, {2.5}, with_num_k(64)), ValidationError);
    CHECK_THROWS_AS(amplification_scan({0.3}, {0.1}, with_num_k(16)), ValidationError);
    CHECK_THROWS_AS(amplification_scan({0.3}, {0.1}, with_num_k(64), -1.0), ValidationError);
}
