#pragma once

// Band structures, flat-band identification, compact localized states and
// the spectral gap at half filling.
//
// The Bloch Hamiltonian is complex Hermitian in the periodic gauge (see
// lattice.hpp), so the eigensolver works on complex matrices throughout.

#include "flatex/lattice.hpp"
#include "flatex/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace flatex {

/// Energy scale used for relative tolerances.
inline double energy_scale(const ChainSpec& s) {
    return std::max({s.t, std::abs(s.js), s.ab_ratio() * s.t});
}

/// Uniform mesh k_j = (2 pi / (N a_n)) (j - N/2 + 1), j = 0..N-1. For even N
/// it covers (-pi/a_n, pi/a_n] and contains both k = 0 and k = pi/a_n.
inline std::vector<double> uniform_kmesh(const ChainSpec& spec, int num_k) {
    const double dk = 2.0 * std::numbers::pi / (num_k * spec.cell_length());
    std::vector<double> k(static_cast<std::size_t>(num_k));
    for (int j = 0; j < num_k; ++j) k[j] = dk * (j - num_k / 2 + 1);
    return k;
}

/// Same spacing, shifted by half a step: never hits k = 0 or k = pi/a_n.
inline std::vector<double> midpoint_kmesh(const ChainSpec& spec, int num_k) {
    const double dk = 2.0 * std::numbers::pi / (num_k * spec.cell_length());
    std::vector<double> k(static_cast<std::size_t>(num_k));
    for (int j = 0; j < num_k; ++j) k[j] = dk * (j - num_k / 2 + 0.5);
    return k;
}

struct BandStructure {
    ChainSpec spec;
    Spin sector = Spin::Up;
    std::vector<double> kmesh;
    Eigen::MatrixXd energies;             ///< (band, k), ascending per k
    std::vector<Eigen::MatrixXcd> states; ///< per k, one column per band
    int flat_band = -1;
    double flat_deviation = 0.0; ///< max_k |E_FB(k) - z JS/2|

    int num_bands() const { return static_cast<int>(energies.rows()); }
    int num_k() const { return static_cast<int>(energies.cols()); }
};

namespace detail {

// Rotates every exactly-degenerate cluster of eigenvectors at k_j onto the
// subspace basis that best overlaps the vectors of the same band indices at
// k_{j-1} (orthogonal Procrustes). Keeps band labels continuous through
// touchings.
inline void align_degenerate(BandStructure& bs, double tol) {
    for (int j = 1; j < bs.num_k(); ++j) {
        const int nb = bs.num_bands();
        int start = 0;
        while (start < nb) {
            int end = start + 1;
            while (end < nb && bs.energies(end, j) - bs.energies(end - 1, j) < tol) ++end;
            const int d = end - start;
            if (d > 1) {
                const Eigen::MatrixXcd u = bs.states[j].middleCols(start, d);
                const Eigen::MatrixXcd prev = bs.states[j - 1].middleCols(start, d);
                const Eigen::MatrixXcd overlap = u.adjoint() * prev;
                Eigen::JacobiSVD<Eigen::MatrixXcd> svd(overlap, Eigen::ComputeFullU | Eigen::ComputeFullV);
                bs.states[j].middleCols(start, d) = u * svd.matrixU() * svd.matrixV().adjoint();
            }
            start = end;
        }
    }
}

} // namespace detail

/// Diagonalizes H_sigma(k) on an arbitrary mesh. Per-k solves run in
/// parallel; the degeneracy alignment pass runs in mesh order afterwards.
inline BandStructure diagonalize_on_mesh(const ChainSpec& spec, Spin sector, std::vector<double> kmesh) {
    const UnitCell cell = build_unit_cell(spec);
    BandStructure bs;
    bs.spec = spec;
    bs.sector = sector;
    bs.kmesh = std::move(kmesh);
    const int nb = spec.orbitals_per_cell();
    const int nk = static_cast<int>(bs.kmesh.size());
    bs.energies.resize(nb, nk);
    bs.states.resize(static_cast<std::size_t>(nk));

    const double scale = energy_scale(spec);
    parallel_for(static_cast<std::size_t>(nk), [&](std::size_t j) {
        const Eigen::MatrixXcd h = bloch_hamiltonian(cell, bs.kmesh[j], sector);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        if (es.info() != Eigen::Success)
            throw NumericalError("eigensolver failed at k = " + std::to_string(bs.kmesh[j]));
        const Eigen::MatrixXcd& v = es.eigenvectors();
        const double resid = (h * v - v * es.eigenvalues().asDiagonal()).norm();
        const double ortho = (v.adjoint() * v - Eigen::MatrixXcd::Identity(nb, nb)).norm();
        if (resid > 1e-12 * std::max(scale, h.norm()) * nb || ortho > 1e-10)
            throw NumericalError("eigenpair residual too large at k = " + std::to_string(bs.kmesh[j]));
        bs.energies.col(static_cast<Eigen::Index>(j)) = es.eigenvalues();
        bs.states[j] = v;
    });

    detail::align_degenerate(bs, 1e-9 * scale);

    const double target = z_sigma(sector) * spec.js / 2.0;
    double best = std::numeric_limits<double>::infinity();
    for (int l = 0; l < nb; ++l) {
        const double dev = (bs.energies.row(l).array() - target).abs().maxCoeff();
        if (dev < best) {
            best = dev;
            bs.flat_band = l;
        }
    }
    bs.flat_deviation = best;
    if (best > 1e-8 * scale)
        throw NumericalError("no flat band found at E = " + std::to_string(target));
    return bs;
}

inline BandStructure diagonalize_bands(const ChainSpec& spec, Spin sector, int num_k) {
    validate(spec);
    if (num_k < 4 || num_k % 2 != 0) throw ValidationError("num_k must be even and >= 4");
    return diagonalize_on_mesh(spec, sector, uniform_kmesh(spec, num_k));
}

/// Standard deviation over k of a band's energy.
inline double band_stddev(const BandStructure& bs, int band) {
    const Eigen::ArrayXd e = bs.energies.row(band).array();
    return std::sqrt((e - e.mean()).square().mean());
}

// --- compact localized states --------------------------------------------

struct ClsAmplitude {
    int cell;
    int slot;
    double amplitude;
};

/// Flat-band eigenstate of the JS = 0 chain with minimal support, anchored
/// at cell 0.
struct ClsVector {
    ChainSpec spec;
    std::vector<ClsAmplitude> amplitudes;
    double normalization = 1.0; ///< factor that was applied to the raw weights
};

/// Stub: B_0, C_0..C_{n-1}, B_1 with weights (1, -alpha, +alpha, ..., (-1)^(n+1))
/// up to normalization 1/sqrt(n alpha^2 + 2). Diamond: (B_0 - C_0)/sqrt(2).
/// The signs follow from the all-negative hopping convention.
inline ClsVector construct_cls(const ChainSpec& spec) {
    validate(spec);
    ClsVector cls;
    cls.spec = with_js(spec, 0.0);
    if (spec.family == Family::Diamond) {
        cls.normalization = 1.0 / std::sqrt(2.0);
        cls.amplitudes = {{0, slots::b, cls.normalization}, {0, slots::c(0), -cls.normalization}};
        return cls;
    }
    const double alpha = spec.ab_ratio();
    const int n = spec.n;
    cls.normalization = 1.0 / std::sqrt(n * alpha * alpha + 2.0);
    cls.amplitudes.push_back({0, slots::b, cls.normalization});
    double sign = -1.0;
    for (int j = 0; j < n; ++j) {
        cls.amplitudes.push_back({0, slots::c(j), sign * alpha * cls.normalization});
        sign = -sign;
    }
    cls.amplitudes.push_back({1, slots::b, (n % 2 == 1 ? 1.0 : -1.0) * cls.normalization});
    return cls;
}

/// Places the CLS (translated by `shift` cells) into a chain of num_cells cells
/// with periodic wrapping.
inline Eigen::VectorXd embed(const ClsVector& cls, int num_cells, int shift = 0) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(num_cells * cls.spec.orbitals_per_cell());
    for (const auto& e : cls.amplitudes) {
        const int c = ((e.cell + shift) % num_cells + num_cells) % num_cells;
        v(site_index(cls.spec, c, e.slot)) += e.amplitude;
    }
    return v;
}

/// ||H cls|| on a periodic JS = 0 chain, in units of t.
inline double cls_residual(const ClsVector& cls, int num_cells = 6) {
    const auto h = real_space_hamiltonian(cls.spec, num_cells, Boundary::Periodic, Spin::Up);
    return (h * embed(cls, num_cells, 1)).norm();
}

// --- gap ------------------------------------------------------------------

struct GapResult {
    double delta = 0.0;
    bool gapless = false;
    std::optional<double> closed_form; ///< Sb[1] only
};

/// Sb[1] gap: JS when alpha >= JS/(sqrt 2 t), else sqrt(JS^2/4 + 4 alpha^2 t^2) - JS/2.
inline double sb1_gap_closed_form(double alpha, double js, double t = 1.0) {
    const double j = std::abs(js);
    if (alpha >= j / (std::numbers::sqrt2 * t)) return j;
    return std::sqrt(j * j / 4.0 + 4.0 * alpha * alpha * t * t) - j / 2.0;
}

/// Smallest energy separating an occupied state of one spin sector from an
/// empty state of the other one, at mu = 0.
inline GapResult gap_delta(const BandStructure& up, const BandStructure& down) {
    const double eps = 1e-12 * energy_scale(up.spec);
    auto highest_occupied = [&](const BandStructure& bs) {
        double m = -std::numeric_limits<double>::infinity();
        for (double e : bs.energies.reshaped())
            if (e <= eps) m = std::max(m, e);
        return m;
    };
    auto lowest_empty = [&](const BandStructure& bs) {
        double m = std::numeric_limits<double>::infinity();
        for (double e : bs.energies.reshaped())
            if (e >= -eps) m = std::min(m, e);
        return m;
    };
    GapResult g;
    g.delta = std::max(0.0, std::min(lowest_empty(down) - highest_occupied(up),
                                     lowest_empty(up) - highest_occupied(down)));
    if (g.delta < 1e-9 * energy_scale(up.spec)) g.delta = 0.0;
    g.gapless = g.delta == 0.0;
    const auto& s = up.spec;
    if (s.family == Family::Stub && s.n == 1) g.closed_form = sb1_gap_closed_form(s.ab_ratio(), s.js, s.t);
    return g;
}

inline GapResult gap_delta(const ChainSpec& spec, int num_k = 512) {
    return gap_delta(diagonalize_bands(spec, Spin::Up, num_k), diagonalize_bands(spec, Spin::Down, num_k));
}

} // namespace flatex
