#include <catch2/catch_amalgamated.hpp>

#include "flatex/spectrum.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>

using namespace flatex;
using Catch::Approx;

namespace {

// Sb[1] levels from the cubic of the 3x3 Bloch matrix (A at 0, C at a/2):
// E = 0 on B,C besides the JS/2 shift, A couples with -alpha t and -2t cos(k/2).
std::vector<double> sb1_levels(double alpha, double js, double k, Spin s) {
    const double e = z_sigma(s) * js / 2.0;
    const double c = 2.0 * std::cos(k / 2.0);
    const double w2 = alpha * alpha + c * c;
    // the B/C combination orthogonal to the A coupling stays at e
    const double disc = std::sqrt(e * e + 4.0 * w2);
    return {(e - disc) / 2.0, e, (e + disc) / 2.0};
}

// Dd[1]: A couples to (B + C)/sqrt2 with 2 sqrt2 t cos(k/2); B - C is flat.
std::vector<double> dd1_levels(double js, double k, Spin s) {
    const double e = z_sigma(s) * js / 2.0;
    const double eps0 = 2.0 * std::numbers::sqrt2 * std::cos(k / 2.0);
    const double disc = std::sqrt(e * e + 4.0 * eps0 * eps0);
    std::vector<double> v{(e - disc) / 2.0, e, (e + disc) / 2.0};
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

TEST_CASE("Sb[1] example energies at k = 0") {
    const auto bs = diagonalize_bands(stub(1, 1.0, 1.0), Spin::Up, 8);
    const int j0 = 3; // uniform mesh index of k = 0 for N = 8
    REQUIRE(bs.kmesh[j0] == 0.0);
    CHECK(bs.energies(0, j0) == Approx(-2.0).margin(1e-12));
    CHECK(bs.energies(1, j0) == Approx(0.5).margin(1e-12));
    CHECK(bs.energies(2, j0) == Approx(2.5).margin(1e-12));
}

TEST_CASE("Sb[1] and Dd[1] bands match closed forms pointwise") {
    for (double alpha : {0.1, 0.5, 1.0, 2.0})
        for (auto s : {Spin::Up, Spin::Down}) {
            const auto bs = diagonalize_bands(stub(1, alpha, 0.6), s, 32);
            for (int j = 0; j < bs.num_k(); ++j) {
                const auto ref = sb1_levels(alpha, 0.6, bs.kmesh[j], s);
                for (int b = 0; b < 3; ++b) CHECK(bs.energies(b, j) == Approx(ref[b]).margin(1e-12));
            }
        }
    for (auto s : {Spin::Up, Spin::Down}) {
        const auto bs = diagonalize_bands(diamond(1, 0.8), s, 32);
        for (int j = 0; j < bs.num_k(); ++j) {
            const auto ref = dd1_levels(0.8, bs.kmesh[j], s);
            for (int b = 0; b < 3; ++b) CHECK(bs.energies(b, j) == Approx(ref[b]).margin(1e-12));
        }
    }
}

TEST_CASE("Dd[1] bands touch at the zone boundary") {
    const auto bs = diagonalize_bands(diamond(1, 1.0), Spin::Up, 8);
    const int jpi = 7;
    REQUIRE(bs.kmesh[jpi] == Approx(std::numbers::pi));
    CHECK(bs.energies(0, jpi) == Approx(0.0).margin(1e-12));
    CHECK(bs.energies(1, jpi) == Approx(0.5).margin(1e-12));
    CHECK(bs.energies(2, jpi) == Approx(0.5).margin(1e-12));
}

TEST_CASE("one flat band per sector at z JS/2") {
    for (const auto& s : {stub(1, 1.0, 1.0), stub(4, 1.0, 1.0), diamond(1, 1.0), diamond(4, 1.0), stub(3, 0.2, 0.05)})
        for (auto sigma : {Spin::Up, Spin::Down}) {
            const auto bs = diagonalize_bands(s, sigma, 64);
            const double target = z_sigma(sigma) * s.js / 2.0;
            int flat = 0;
            for (int b = 0; b < bs.num_bands(); ++b)
                if ((bs.energies.row(b).array() - target).abs().maxCoeff() <= 1e-9) ++flat;
            CHECK(flat == 1);
            CHECK(bs.flat_band == s.n);
            CHECK(band_stddev(bs, bs.flat_band) <= 1e-10);
        }
}

TEST_CASE("JS = 0 gives an exactly flat band at zero") {
    for (const auto& s : {stub(2, 0.4, 0.0), diamond(3, 0.0)}) {
        const auto bs = diagonalize_bands(s, Spin::Up, 32);
        CHECK(bs.energies.row(bs.flat_band).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("eigenvectors are orthonormal at every k") {
    const auto bs = diagonalize_bands(stub(3, 0.7, 0.4), Spin::Down, 16);
    for (const auto& v : bs.states)
        CHECK((v.adjoint() * v - Eigen::MatrixXcd::Identity(v.cols(), v.cols())).norm() <= 1e-10);
}

TEST_CASE("down-sector energies are the up-sector energies with JS reversed") {
    const ChainSpec s = stub(2, 0.6, 0.5);
    const auto down = diagonalize_bands(s, Spin::Down, 16);
    const auto up_rev = diagonalize_bands(with_js(s, -0.5), Spin::Up, 16);
    CHECK((down.energies - up_rev.energies).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("repeated diagonalization is bitwise identical") {
    const ChainSpec s = diamond(2, 0.5);
    const auto a = diagonalize_bands(s, Spin::Up, 64);
    const auto b = diagonalize_bands(s, Spin::Up, 64);
    CHECK(a.energies == b.energies);
    for (std::size_t j = 0; j < a.states.size(); ++j) CHECK(a.states[j] == b.states[j]);
}

TEST_CASE("degenerate clusters follow the previous k point") {
    // Dd[1] at JS = 0: the two dispersive bands and the flat band meet at k = pi.
    const auto bs = diagonalize_on_mesh(diamond(1, 0.0), Spin::Up, {3.0, 3.1, std::numbers::pi});
    const int flat = bs.flat_band;
    const double overlap = std::abs(bs.states[1].col(flat).dot(bs.states[2].col(flat)));
    CHECK(overlap == Approx(1.0).margin(1e-9));
}

TEST_CASE("mesh validation") {
    CHECK_THROWS_AS(diagonalize_bands(stub(1, 1, 1), Spin::Up, 3), ValidationError);
    CHECK_THROWS_AS(diagonalize_bands(stub(1, 1, 1), Spin::Up, 2), ValidationError);
}

TEST_CASE("uniform mesh contains 0 and pi, midpoint mesh avoids them") {
    const ChainSpec s = stub(2, 1, 1);
    const auto u = uniform_kmesh(s, 16);
    const double edge = std::numbers::pi / s.cell_length();
    CHECK(std::count(u.begin(), u.end(), 0.0) == 1);
    CHECK(u.back() == Approx(edge));
    for (double k : midpoint_kmesh(s, 16)) {
        CHECK(std::abs(k) > 1e-6);
        CHECK(std::abs(std::abs(k) - edge) > 1e-6);
    }
}

TEST_CASE("diamond CLS is (B - C)/sqrt2 for every n") {
    for (int n : {1, 2, 5}) {
        const auto cls = construct_cls(diamond(n, 0.3));
        REQUIRE(cls.amplitudes.size() == 2);
        CHECK(cls.amplitudes[0].slot == slots::b);
        CHECK(cls.amplitudes[0].amplitude == Approx(1.0 / std::numbers::sqrt2));
        CHECK(cls.amplitudes[1].slot == slots::c(0));
        CHECK(cls.amplitudes[1].amplitude == Approx(-1.0 / std::numbers::sqrt2));
        CHECK(cls_residual(cls) < 1e-12);
    }
}

TEST_CASE("Sb[1] CLS weights") {
    const double alpha = 0.6;
    const auto cls = construct_cls(stub(1, alpha, 0.0));
    const double nrm = 1.0 / std::sqrt(alpha * alpha + 2.0);
    REQUIRE(cls.amplitudes.size() == 3);
    CHECK(cls.normalization == Approx(nrm));
    // relative weights (B_i, C_i, B_{i+1}) = (1, -alpha, 1) with all-negative hoppings
    CHECK(cls.amplitudes[0].amplitude == Approx(nrm));
    CHECK(cls.amplitudes[1].amplitude == Approx(-alpha * nrm));
    CHECK(cls.amplitudes[2].amplitude == Approx(nrm));
    CHECK(cls.amplitudes[2].cell == 1);
    CHECK(cls_residual(cls) < 1e-12);
    CHECK(embed(cls, 4).norm() == Approx(1.0));
}

TEST_CASE("Sb[n] CLS is annihilated by H") {
    for (int n : {2, 3, 4, 7}) {
        const auto cls = construct_cls(stub(n, 0.3, 0.0));
        CHECK(static_cast<int>(cls.amplitudes.size()) == n + 2);
        CHECK(cls_residual(cls) < 1e-10);
        CHECK(embed(cls, 5).norm() == Approx(1.0));
    }
}

TEST_CASE("translated CLSs span the flat band") {
    for (const auto& s : {stub(1, 0.5, 0.0), stub(3, 0.3, 0.0), diamond(1, 0.0), diamond(2, 0.0)})
        for (int cells : {3, 5, 8}) {
            const auto cls = construct_cls(s);
            Eigen::MatrixXd span(cells * s.orbitals_per_cell(), cells);
            for (int c = 0; c < cells; ++c) span.col(c) = embed(cls, cells, c);
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(span);
            svd.setThreshold(1e-10);
            CHECK(svd.rank() == cells);

            const Eigen::MatrixXd h = Eigen::MatrixXd(real_space_hamiltonian(s, cells, Boundary::Periodic, Spin::Up));
            CHECK((h * span).norm() < 1e-10);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
            const auto zeros = (es.eigenvalues().array().abs() < 1e-10).count();
            long bloch_zeros = 0;
            for (int m = 0; m < cells; ++m) {
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> bk(
                    bloch_hamiltonian(s, 2.0 * std::numbers::pi * m / (cells * s.cell_length()), Spin::Up));
                bloch_zeros += (bk.eigenvalues().array().abs() < 1e-10).count();
            }
            CHECK(zeros == bloch_zeros);
            CHECK(zeros >= cells);
        }
}

TEST_CASE("gap at half filling") {
    const auto g1 = gap_delta(stub(1, 1.0, 0.1));
    CHECK(g1.delta == Approx(0.1).margin(1e-9));
    REQUIRE(g1.closed_form);
    CHECK(*g1.closed_form == Approx(0.1));

    const auto g2 = gap_delta(stub(1, 0.01, 1.0), 1024);
    CHECK(*g2.closed_form == Approx(std::sqrt(0.25 + 0.0004) - 0.5).epsilon(1e-12));
    CHECK(g2.delta == Approx(*g2.closed_form).epsilon(1e-3));

    for (double js : {0.2, 1.0}) {
        const auto gd = gap_delta(diamond(1, js), 64);
        CHECK(gd.gapless);
        CHECK(gd.delta == 0.0);
    }
}

TEST_CASE("Sb[1] gap closed form matches the spectrum on both sides of the switch") {
    for (double alpha : {0.05, 0.2, 0.5, 1.5})
        for (double js : {0.1, 0.5, 1.0}) {
            const auto g = gap_delta(stub(1, alpha, js), 512);
            // the mesh contains k = pi where the lower-band maximum sits
            CHECK(g.delta == Approx(*g.closed_form).margin(1e-9));
        }
}
