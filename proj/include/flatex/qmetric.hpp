#pragma once

// Flat-band quantum metric at JS = 0.
//
// g(k) = <d_k u|d_k u> - |<d_k u|u>|^2 is evaluated in the periodic gauge
// (orbital positions in the Bloch phases). Its Brillouin-zone average
// <g> = (a_n / 2 pi) int_BZ g(k) dk is the gauge-invariant spread of the flat
// band Wannier function, in units of a^2. The conventional cell gauge (all
// orbitals at the cell origin) gives a different, position-blind value and
// is not used.
//
// Discretization: 1 - |<u_k|u_{k+dk}>|^2 = g(k) dk^2 + O(dk^4), which only
// involves overlap magnitudes and is therefore insensitive to the arbitrary
// eigenvector phases returned by the solver.

#include "flatex/spectrum.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace flatex {

struct QuantumMetricResult {
    ChainSpec spec;                 ///< JS forced to 0
    std::vector<double> kmesh;
    std::vector<double> g_samples;  ///< g(k), units of a^2
    double g_avg = 0.0;             ///< <g>, units of a^2
    double g_avg_coarse = 0.0;      ///< same on every second mesh point
    double error_estimate = 0.0;    ///< Richardson estimate |g(N) - g(N/2)| / 3
    int refined_intervals = 0;      ///< intervals subdivided for small overlaps
    bool converged() const { return error_estimate <= 0.01 * g_avg || g_avg <= 1e-10 * spec.a * spec.a; }
    double g_avg_over_a2() const { return g_avg / (spec.a * spec.a); }
};

/// <g> = a^2 / (2 alpha sqrt(alpha^2 + 4)) for Sb[1].
inline double sb1_metric_closed_form(double alpha, double a = 1.0) {
    return a * a / (2.0 * alpha * std::sqrt(alpha * alpha + 4.0));
}

namespace detail {

// Flat-band state at k continued from `ref`: the projection of ref onto the
// eigenvectors with |E| within 1e-8 t of zero (more than one where a
// dispersive band touches the flat band).
inline Eigen::VectorXcd flat_band_state(const UnitCell& cell, double k, const Eigen::VectorXcd& ref) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bloch_hamiltonian(cell, k, Spin::Up));
    const auto& e = es.eigenvalues();
    Eigen::Index best = 0;
    e.cwiseAbs().minCoeff(&best);
    const double tol = std::abs(e(best)) + 1e-8 * std::abs(cell.spec.t);
    Eigen::VectorXcd proj = Eigen::VectorXcd::Zero(ref.size());
    for (Eigen::Index i = 0; i < e.size(); ++i)
        if (std::abs(e(i)) <= tol) proj += es.eigenvectors().col(i) * es.eigenvectors().col(i).dot(ref);
    const double nrm = proj.norm();
    return nrm > 1e-6 ? Eigen::VectorXcd(proj / nrm) : Eigen::VectorXcd(es.eigenvectors().col(best));
}

/// u_{k+G} = e^{-i G x} u_k in the periodic gauge.
inline Eigen::VectorXcd shift_by_reciprocal(const UnitCell& cell, const Eigen::VectorXcd& u) {
    const double g = 2.0 * std::numbers::pi / cell.spec.cell_length();
    Eigen::VectorXcd out = u;
    for (const auto& o : cell.orbitals) out(o.slot) *= std::polar(1.0, -g * o.position);
    return out;
}

// 1 - |<u|v>|^2 for unit vectors, as the squared residual of projecting v on u
// (no cancellation when the states nearly coincide).
inline double overlap_defect(const Eigen::VectorXcd& u, const Eigen::VectorXcd& v) {
    return (v - u * u.dot(v)).squaredNorm();
}

// int g dk over [k0, k1]. The midpoint state is always probed; the interval is
// split again while the one- and two-step overlap defects disagree. A missed
// sharp feature shows up as an O(1) disagreement, round-off as < 1e-9.
inline double interval_metric(const UnitCell& cell, double k0, const Eigen::VectorXcd& u0, double k1,
                              const Eigen::VectorXcd& u1, int depth, int& refined) {
    const double h = k1 - k0;
    const Eigen::VectorXcd um = flat_band_state(cell, 0.5 * (k0 + k1), u0);
    const double coarse = overlap_defect(u0, u1);
    const double fine = 2.0 * (overlap_defect(u0, um) + overlap_defect(um, u1));
    if (std::abs(fine - coarse) <= 1e-2 * fine + 1e-9 || depth >= 24) return fine / h;
    ++refined;
    return interval_metric(cell, k0, u0, 0.5 * (k0 + k1), um, depth + 1, refined) +
           interval_metric(cell, 0.5 * (k0 + k1), um, k1, u1, depth + 1, refined);
}

} // namespace detail

/// <g> from flat-band states sampled on a uniform periodic mesh (the state at
/// the first point is reused, shifted by a reciprocal vector, to close the
/// loop). Phases of the inputs are irrelevant.
inline double metric_average_from_states(const UnitCell& cell, const std::vector<double>& kmesh,
                                         const std::vector<Eigen::VectorXcd>& states) {
    const std::size_t nk = kmesh.size();
    const double dk = 2.0 * std::numbers::pi / (cell.spec.cell_length() * nk);
    double sum = 0.0;
    for (std::size_t j = 0; j < nk; ++j) {
        const Eigen::VectorXcd next = j + 1 < nk ? states[j + 1] : detail::shift_by_reciprocal(cell, states[0]);
        sum += detail::overlap_defect(states[j], next);
    }
    return cell.spec.cell_length() / (2.0 * std::numbers::pi) * sum / dk;
}

inline QuantumMetricResult quantum_metric(const ChainSpec& spec_in, int num_k) {
    validate(spec_in);
    if (num_k < 64 || num_k % 2 != 0) throw ValidationError("quantum metric needs an even num_k >= 64");
    QuantumMetricResult res;
    res.spec = with_js(spec_in, 0.0);
    const UnitCell cell = build_unit_cell(res.spec);
    res.kmesh = midpoint_kmesh(res.spec, num_k);
    const double L = res.spec.cell_length();
    const double G = 2.0 * std::numbers::pi / L;
    const double dk = G / num_k;

    const BandStructure bs = diagonalize_on_mesh(res.spec, Spin::Up, res.kmesh);
    std::vector<Eigen::VectorXcd> u(static_cast<std::size_t>(num_k));
    for (int j = 0; j < num_k; ++j) u[j] = bs.states[j].col(bs.flat_band);

    // per-interval contributions on the fine mesh, with local refinement
    std::vector<double> interval(static_cast<std::size_t>(num_k));
    for (int j = 0; j < num_k; ++j) {
        const double k1 = j + 1 < num_k ? res.kmesh[j + 1] : res.kmesh[0] + G;
        const Eigen::VectorXcd u1 = j + 1 < num_k ? u[j + 1] : detail::shift_by_reciprocal(cell, u[0]);
        interval[j] = detail::interval_metric(cell, res.kmesh[j], u[j], k1, u1, 0, res.refined_intervals);
    }
    double total = 0.0;
    for (double v : interval) total += v;
    res.g_avg = L / (2.0 * std::numbers::pi) * total;

    res.g_samples.resize(static_cast<std::size_t>(num_k));
    for (int j = 0; j < num_k; ++j) {
        const double left = interval[(j + num_k - 1) % num_k];
        res.g_samples[j] = 0.5 * (left + interval[j]) / dk;
    }

    int dummy = 0;
    double coarse = 0.0;
    for (int j = 0; j < num_k; j += 2) {
        const double k1 = j + 2 < num_k ? res.kmesh[j + 2] : res.kmesh[0] + G;
        const Eigen::VectorXcd u1 = j + 2 < num_k ? u[j + 2] : detail::shift_by_reciprocal(cell, u[0]);
        coarse += detail::interval_metric(cell, res.kmesh[j], u[j], k1, u1, 0, dummy);
    }
    res.g_avg_coarse = L / (2.0 * std::numbers::pi) * coarse;
    res.error_estimate = std::abs(res.g_avg - res.g_avg_coarse) / 3.0;
    return res;
}

} // namespace flatex
