#pragma once

// Geometry and Hamiltonians of the diluted stub chain Sb[n] and the diluted
// diamond chain Dd[n].
//
// Both chains are built on an A spine (sites at j*a) with C orbitals sitting
// half-way between consecutive A sites, so along the axis the chain reads
// A-C-A-C... Each unit cell spans n*a and keeps a single B orbital:
//   Stub:    B hangs off A_0 (same axis coordinate, hopping -alpha*t).
//   Diamond: B is the upper partner of C_0 in the A_0/A_1 plaquette
//            (same axis coordinate as C_0, hoppings -t to both A's).
// All other bonds are -t. Slot layout inside a cell is shared by both
// families: A_0 = 0, B = 1, C_j = 2j+2, A_j = 2j+1 (j >= 1). For n = 1 this
// is the (A, B, C) basis.

#include "flatex/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace flatex {

using cplx = std::complex<double>;

enum class Family { Stub, Diamond };
enum class Sublattice { A, B, C };
enum class Spin { Up, Down };
enum class Boundary { Open, Periodic };

inline int z_sigma(Spin s) { return s == Spin::Up ? +1 : -1; }

inline std::string to_string(Family f) { return f == Family::Stub ? "stub" : "diamond"; }
inline std::string to_string(Spin s) { return s == Spin::Up ? "up" : "down"; }
inline std::string to_string(Sublattice s) {
    switch (s) {
    case Sublattice::A: return "A";
    case Sublattice::B: return "B";
    default: return "C";
    }
}

inline Family parse_family(const std::string& s) {
    if (s == "stub" || s == "Stub" || s == "Sb") return Family::Stub;
    if (s == "diamond" || s == "Diamond" || s == "Dd") return Family::Diamond;
    throw ValidationError("unknown chain family '" + s + "' (expected stub or diamond)");
}

inline Spin parse_spin(const std::string& s) {
    if (s == "up") return Spin::Up;
    if (s == "down") return Spin::Down;
    throw ValidationError("unknown spin sector '" + s + "'");
}

/// Full parameterization of an Sb[n] or Dd[n] chain. Energies in units of
/// t, lengths in units of a.
struct ChainSpec {
    Family family = Family::Stub;
    int n = 1;
    std::optional<double> alpha; ///< Stub only; perpendicular A-B hopping is -alpha*t
    double t = 1.0;
    double js = 0.0; ///< local exchange J*S
    double a = 1.0;

    double cell_length() const { return n * a; }
    int orbitals_per_cell() const { return 2 * n + 1; }
    /// Effective A-B hopping ratio: alpha for stubs (default 1), 1 for diamonds.
    double ab_ratio() const { return family == Family::Stub ? alpha.value_or(1.0) : 1.0; }

    bool operator==(const ChainSpec&) const = default;
};

inline ChainSpec stub(int n, double alpha, double js) {
    ChainSpec s;
    s.family = Family::Stub;
    s.n = n;
    s.alpha = alpha;
    s.js = js;
    return s;
}

inline ChainSpec diamond(int n, double js) {
    ChainSpec s;
    s.family = Family::Diamond;
    s.n = n;
    s.js = js;
    return s;
}

inline ChainSpec with_js(ChainSpec s, double js) {
    s.js = js;
    return s;
}

/// Throws ValidationError on n < 1, t <= 0, a <= 0 or non-finite values.
/// Returns warnings (alpha supplied for a diamond chain, which is ignored).
inline std::vector<std::string> validate(const ChainSpec& s) {
    if (s.n < 1) throw ValidationError("dilution index n must be >= 1 (got " + std::to_string(s.n) + ")");
    if (!(s.t > 0.0) || !std::isfinite(s.t)) throw ValidationError("hopping t must be positive");
    if (!(s.a > 0.0) || !std::isfinite(s.a)) throw ValidationError("lattice constant a must be positive");
    if (!std::isfinite(s.js)) throw ValidationError("JS must be finite");
    std::vector<std::string> warnings;
    if (s.family == Family::Stub && s.alpha && !std::isfinite(*s.alpha))
        throw ValidationError("alpha must be finite");
    if (s.family == Family::Diamond && s.alpha)
        warnings.push_back("alpha is not a parameter of diamond chains; ignored");
    return warnings;
}

struct Orbital {
    Sublattice sublattice;
    int cell = 0;
    int slot = 0;
    double position = 0.0; ///< chain-axis coordinate
    bool magnetic() const { return sublattice != Sublattice::A; }
};

/// Bond from `from_slot` in cell c to `to_slot` in cell c + cell_offset.
struct Hopping {
    int from_slot;
    int to_slot;
    int cell_offset;
    double amplitude;
};

struct UnitCell {
    ChainSpec spec;
    std::vector<Orbital> orbitals; ///< indexed by slot, cell 0
    std::vector<Hopping> hoppings; ///< each bond listed once
    std::vector<std::string> warnings;
};

namespace slots {
inline int a(int j) { return j == 0 ? 0 : 2 * j + 1; }
inline constexpr int b = 1;
inline int c(int j) { return 2 * j + 2; }
} // namespace slots

inline UnitCell build_unit_cell(const ChainSpec& spec) {
    UnitCell cell;
    cell.warnings = validate(spec);
    cell.spec = spec;
    const int n = spec.n;
    const double a = spec.a;
    const double t = spec.t;

    cell.orbitals.resize(static_cast<std::size_t>(spec.orbitals_per_cell()));
    for (int j = 0; j < n; ++j) {
        cell.orbitals[slots::a(j)] = {Sublattice::A, 0, slots::a(j), j * a};
        cell.orbitals[slots::c(j)] = {Sublattice::C, 0, slots::c(j), (j + 0.5) * a};
    }
    const double xb = spec.family == Family::Stub ? 0.0 : 0.5 * a;
    cell.orbitals[slots::b] = {Sublattice::B, 0, slots::b, xb};

    // A-C spine
    for (int j = 0; j < n; ++j) {
        cell.hoppings.push_back({slots::a(j), slots::c(j), 0, -t});
        if (j + 1 < n)
            cell.hoppings.push_back({slots::c(j), slots::a(j + 1), 0, -t});
        else
            cell.hoppings.push_back({slots::c(j), slots::a(0), 1, -t});
    }
    if (spec.family == Family::Stub) {
        cell.hoppings.push_back({slots::a(0), slots::b, 0, -spec.ab_ratio() * t});
    } else {
        cell.hoppings.push_back({slots::a(0), slots::b, 0, -t});
        if (n > 1)
            cell.hoppings.push_back({slots::b, slots::a(1), 0, -t});
        else
            cell.hoppings.push_back({slots::b, slots::a(0), 1, -t});
    }
    return cell;
}

/// First slot of a given sublattice (the reference orbital for couplings).
inline int reference_slot(const ChainSpec& spec, Sublattice s) {
    (void)spec;
    switch (s) {
    case Sublattice::A: return slots::a(0);
    case Sublattice::B: return slots::b;
    default: return slots::c(0);
    }
}

inline double onsite_energy(const Orbital& o, const ChainSpec& spec, Spin sector) {
    return o.magnetic() ? z_sigma(sector) * spec.js / 2.0 : 0.0;
}

/// Bloch Hamiltonian in the periodic gauge: every bond carries
/// exp(i k (X_to - X_from)) with X the true axis coordinate. The result is
/// Hermitian; it is real for n = 1 and complex otherwise.
inline Eigen::MatrixXcd bloch_hamiltonian(const UnitCell& cell, double k, Spin sector) {
    const int dim = cell.spec.orbitals_per_cell();
    const double L = cell.spec.cell_length();
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& o : cell.orbitals) h(o.slot, o.slot) = onsite_energy(o, cell.spec, sector);
    for (const auto& hop : cell.hoppings) {
        const double dx = cell.orbitals[hop.to_slot].position + hop.cell_offset * L -
                          cell.orbitals[hop.from_slot].position;
        const cplx v = hop.amplitude * std::polar(1.0, k * dx);
        h(hop.from_slot, hop.to_slot) += v;
        h(hop.to_slot, hop.from_slot) += std::conj(v);
    }
    return h;
}

inline Eigen::MatrixXcd bloch_hamiltonian(const ChainSpec& spec, double k, Spin sector) {
    return bloch_hamiltonian(build_unit_cell(spec), k, sector);
}

/// Index of (cell, slot) in a finite chain.
inline int site_index(const ChainSpec& spec, int cell, int slot) {
    return cell * spec.orbitals_per_cell() + slot;
}

/// Real-space Hamiltonian of `num_cells` cells. Periodic boundaries close the
/// ring; open boundaries drop the bonds leaving the last cell.
inline Eigen::SparseMatrix<double> real_space_hamiltonian(const ChainSpec& spec, int num_cells,
                                                          Boundary boundary, Spin sector) {
    if (num_cells < 2) throw ValidationError("real-space chain needs at least 2 cells");
    const UnitCell cell = build_unit_cell(spec);
    const int dim = num_cells * spec.orbitals_per_cell();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(num_cells) * (cell.orbitals.size() + 2 * cell.hoppings.size()));
    for (int c = 0; c < num_cells; ++c) {
        for (const auto& o : cell.orbitals) {
            const double e = onsite_energy(o, spec, sector);
            if (e != 0.0) trip.emplace_back(site_index(spec, c, o.slot), site_index(spec, c, o.slot), e);
        }
        for (const auto& hop : cell.hoppings) {
            int c2 = c + hop.cell_offset;
            if (c2 >= num_cells) {
                if (boundary == Boundary::Open) continue;
                c2 -= num_cells;
            }
            const int i = site_index(spec, c, hop.from_slot);
            const int j = site_index(spec, c2, hop.to_slot);
            trip.emplace_back(i, j, hop.amplitude);
            trip.emplace_back(j, i, hop.amplitude);
        }
    }
    Eigen::SparseMatrix<double> h(dim, dim);
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
}

/// Orbitals of a finite chain with absolute positions.
inline std::vector<Orbital> real_space_orbitals(const ChainSpec& spec, int num_cells) {
    const UnitCell cell = build_unit_cell(spec);
    std::vector<Orbital> out;
    out.reserve(static_cast<std::size_t>(num_cells) * cell.orbitals.size());
    for (int c = 0; c < num_cells; ++c)
        for (auto o : cell.orbitals) {
            o.cell = c;
            o.position += c * spec.cell_length();
            out.push_back(o);
        }
    return out;
}

} // namespace flatex
