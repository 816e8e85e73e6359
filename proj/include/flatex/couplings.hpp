#pragma once

// Exchange couplings between localized spins at half filling and T = 0.
//
// Band route: for an orbital pair (a, b) the double momentum sum
//
//   J(R) = (JS)^2 / (2 N^2) sum_{p,q} sum_{k,k'} e^{i(k-k')rho} A^{pq}_{kk'}
//          [f(E^{p,up}_k) - f(E^{q,dn}_{k'})] / [E^{p,up}_k - E^{q,dn}_{k'}]
//
// (rho = X_a - X_b) depends on R only through e^{i(k-k')m a_n} once the
// intra-cell offset is absorbed into the per-k weights. Grouping the terms by
// d = j - j' (mesh indices) gives S_pq(d); a single O(N^2) pass then yields
// J for every cell separation m through an N-point Fourier sum.
//
// Oracle route: exact diagonalization of the finite chain and the Lehmann
// form of the frequency integral with a Lorentzian broadening eta, whose
// omega integral is known in closed form:
//   int_{-inf}^{mu} -(1/pi) Im[G_up G_dn] = sum c_nm (f_eta(E_n) - f_eta(E_m)) / (E_n - E_m),
//   f_eta(E) = 1/2 + atan((mu - E) / eta) / pi.

#include "flatex/spectrum.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace flatex {

struct SitePair {
    Sublattice a = Sublattice::B;
    Sublattice b = Sublattice::B;
    bool operator==(const SitePair&) const = default;
};

inline std::string to_string(SitePair p) { return to_string(p.a) + to_string(p.b); }

inline SitePair parse_pair(const std::string& s) {
    auto one = [&](char c) {
        switch (c) {
        case 'B': case 'b': return Sublattice::B;
        case 'C': case 'c': return Sublattice::C;
        default: throw ValidationError("pair '" + s + "' must combine magnetic sublattices B and C");
        }
    };
    if (s.size() != 2) throw ValidationError("pair must be two letters, e.g. BB (got '" + s + "')");
    return {one(s[0]), one(s[1])};
}

struct ComputeConfig {
    int num_k = 1024;             ///< N_c, number of cells / k points
    double mu = 0.0;              ///< chemical potential (half filling)
    double temperature = 0.0;     ///< only T = 0 is supported
    double eta = 1e-12;           ///< oracle broadening, units of t
    double degenerate_eps = 1e-10; ///< |E - E'| below this counts as degenerate
    double coupling_floor = 1e-14; ///< |J| below this is numerically unresolved
};

inline void validate(const ComputeConfig& c, double t = 1.0) {
    if (c.num_k < 4 || c.num_k % 2 != 0) throw ValidationError("num_k must be even and >= 4");
    if (c.mu != 0.0) throw ValidationError("only half filling (mu = 0) is supported");
    if (c.temperature != 0.0) throw ValidationError("only T = 0 is supported");
    if (!(c.eta > 0.0)) throw ValidationError("eta must be positive");
    if (c.degenerate_eps < 1e-12 * t || c.degenerate_eps > 1e-6 * t)
        throw ValidationError("degenerate_eps must lie in [1e-12, 1e-6] t");
    if (!(c.coupling_floor >= 0.0)) throw ValidationError("coupling_floor must be non-negative");
}

/// T = 0 occupation; states within eps of mu are half filled.
inline double occupation(double e, double mu, double eps) {
    if (e < mu - eps) return 1.0;
    if (e > mu + eps) return 0.0;
    return 0.5;
}

/// A concrete orbital pair realizing a separation R = X_b - X_a: the
/// reference orbital of sublattice a in cell 0 and slot_b in cell `cell`.
struct OrbitalPair {
    int slot_a = 0;
    int slot_b = 0;
    int cell = 0;
    double R = 0.0;
};

/// Every separation 0 <= R <= r_max for the sublattice pair, ascending.
/// Self pairs (R = 0 with the same orbital) are left out.
inline std::vector<OrbitalPair> allowed_separations(const ChainSpec& spec, SitePair pair, double r_max) {
    const UnitCell cell = build_unit_cell(spec);
    const int sa = reference_slot(spec, pair.a);
    const double xa = cell.orbitals[sa].position;
    const double L = spec.cell_length();
    const double tol = 1e-9 * spec.a;
    std::vector<OrbitalPair> out;
    for (const auto& o : cell.orbitals) {
        if (o.sublattice != pair.b) continue;
        const int m0 = static_cast<int>(std::ceil((xa - o.position - tol) / L));
        for (int m = m0;; ++m) {
            const double r = m * L + o.position - xa;
            if (r > r_max + tol) break;
            if (r < -tol) continue;
            if (m == 0 && o.slot == sa) continue;
            out.push_back({sa, o.slot, m, std::abs(r) < tol ? 0.0 : r});
        }
    }
    std::sort(out.begin(), out.end(), [](const OrbitalPair& x, const OrbitalPair& y) { return x.R < y.R; });
    return out;
}

/// Orbital pair at signed separation R (b sits at X_a + R). Throws if R is not
/// a lattice separation for the pair, or names the self pair.
inline OrbitalPair resolve_separation(const ChainSpec& spec, SitePair pair, double R) {
    const UnitCell cell = build_unit_cell(spec);
    const int sa = reference_slot(spec, pair.a);
    const double xa = cell.orbitals[sa].position;
    const double L = spec.cell_length();
    for (const auto& o : cell.orbitals) {
        if (o.sublattice != pair.b) continue;
        const double mreal = (R + xa - o.position) / L;
        const double m = std::round(mreal);
        if (std::abs(mreal - m) * L < 1e-9 * spec.a) {
            if (m == 0 && o.slot == sa) throw ValidationError("self-coupling (R = 0 on the same orbital) is not defined");
            return {sa, o.slot, static_cast<int>(m), R};
        }
    }
    throw ValidationError("R = " + std::to_string(R) + " is not a lattice separation for pair " + to_string(pair));
}

struct Contribution {
    int p; ///< band index, up sector
    int q; ///< band index, down sector
    double value;
};

struct CouplingValue {
    double R = 0.0;
    double J = 0.0;
    double imag_residue = 0.0;
    std::vector<Contribution> contributions; ///< I^{pq}, summing to J
    long excluded_pairs = 0;                 ///< (k,k') level crossings dropped at mu
};

/// Momentum-space coupling engine over a pair of band structures on a
/// common mesh.
class CouplingEngine {
public:
    /// S_pq(d) for one orbital pair.
    struct Kernel {
        int slot_a = 0;
        int slot_b = 0;
        std::vector<std::pair<int, int>> band_pairs;
        std::vector<std::vector<cplx>> sums; ///< per band pair, indexed by d
        double magnitude = 0.0;              ///< sum of |S_pq(d)|, rounding scale
        long excluded = 0;
    };

    CouplingEngine(BandStructure up, BandStructure down, ComputeConfig cfg)
        : up_(std::move(up)), down_(std::move(down)), cfg_(cfg), cell_(build_unit_cell(up_.spec)) {
        validate(cfg_, up_.spec.t);
        if (up_.sector != Spin::Up || down_.sector != Spin::Down)
            throw ValidationError("CouplingEngine needs (up, down) band structures");
        if (!(up_.spec == down_.spec) || up_.kmesh != down_.kmesh)
            throw ValidationError("band structures must share spec and k mesh");
        const int nk = up_.num_k();
        occ_up_.resize(up_.num_bands(), nk);
        occ_dn_.resize(down_.num_bands(), nk);
        for (int j = 0; j < nk; ++j) {
            for (int p = 0; p < up_.num_bands(); ++p)
                occ_up_(p, j) = occupation(up_.energies(p, j), cfg_.mu, cfg_.degenerate_eps);
            for (int q = 0; q < down_.num_bands(); ++q)
                occ_dn_(q, j) = occupation(down_.energies(q, j), cfg_.mu, cfg_.degenerate_eps);
        }
    }

    static CouplingEngine from_spec(const ChainSpec& spec, const ComputeConfig& cfg) {
        validate(spec);
        validate(cfg, spec.t);
        return CouplingEngine(diagonalize_bands(spec, Spin::Up, cfg.num_k),
                              diagonalize_bands(spec, Spin::Down, cfg.num_k), cfg);
    }

    const ChainSpec& spec() const { return up_.spec; }
    const ComputeConfig& config() const { return cfg_; }
    int num_k() const { return up_.num_k(); }
    const BandStructure& up() const { return up_; }
    const BandStructure& down() const { return down_; }

    Kernel kernel(int slot_a, int slot_b) const {
        const int nk = num_k();
        const double dx = cell_.orbitals[slot_a].position - cell_.orbitals[slot_b].position;
        Kernel ker;
        ker.slot_a = slot_a;
        ker.slot_b = slot_b;

        // w_up(p, j) = e^{i k dx} u_p(a) u_p(b)^*, w_dn(q, j) = e^{-i k dx} u_q(b) u_q(a)^*
        Eigen::MatrixXcd w_up(up_.num_bands(), nk), w_dn(down_.num_bands(), nk);
        for (int j = 0; j < nk; ++j) {
            const cplx ph = std::polar(1.0, up_.kmesh[j] * dx);
            for (int p = 0; p < up_.num_bands(); ++p)
                w_up(p, j) = ph * up_.states[j](slot_a, p) * std::conj(up_.states[j](slot_b, p));
            for (int q = 0; q < down_.num_bands(); ++q)
                w_dn(q, j) = std::conj(ph) * down_.states[j](slot_b, q) * std::conj(down_.states[j](slot_a, q));
        }

        for (int p = 0; p < up_.num_bands(); ++p) {
            const double fmin = occ_up_.row(p).minCoeff(), fmax = occ_up_.row(p).maxCoeff();
            for (int q = 0; q < down_.num_bands(); ++q) {
                const double gmin = occ_dn_.row(q).minCoeff(), gmax = occ_dn_.row(q).maxCoeff();
                const bool identical = fmin == fmax && gmin == gmax && fmin == gmin;
                if (!identical) ker.band_pairs.emplace_back(p, q);
            }
        }

        // Row blocks have a size fixed by nk alone, and partial sums are merged
        // in block order, so results do not depend on the worker count.
        const int block = std::max(64, nk / 16);
        const int nblocks = (nk + block - 1) / block;
        const std::size_t npairs = ker.band_pairs.size();
        std::vector<std::vector<cplx>> partial(npairs * static_cast<std::size_t>(nblocks));
        std::vector<long> excluded(partial.size(), 0);
        parallel_for(partial.size(), [&](std::size_t task) {
            const auto [p, q] = ker.band_pairs[task / nblocks];
            const int b = static_cast<int>(task % nblocks);
            auto& s = partial[task];
            s.assign(static_cast<std::size_t>(nk), cplx{});
            excluded[task] = accumulate(p, q, b * block, std::min(nk, (b + 1) * block), w_up, w_dn, s);
        });

        ker.sums.resize(npairs);
        for (std::size_t ip = 0; ip < npairs; ++ip) {
            auto& s = ker.sums[ip];
            s.assign(static_cast<std::size_t>(nk), cplx{});
            for (int b = 0; b < nblocks; ++b) {
                const auto& part = partial[ip * nblocks + b];
                for (int d = 0; d < nk; ++d) s[d] += part[d];
                ker.excluded += excluded[ip * nblocks + b];
            }
            for (const auto& v : s) ker.magnitude += std::abs(v);
        }
        return ker;
    }

    /// Coupling between the reference orbital (slot_a, cell 0) and
    /// (slot_b, cell m).
    CouplingValue evaluate(const Kernel& ker, int m) const {
        const int nk = num_k();
        const double pref = spec().js * spec().js / (2.0 * double(nk) * double(nk));
        CouplingValue out;
        out.R = m * spec().cell_length() + cell_.orbitals[ker.slot_b].position -
                cell_.orbitals[ker.slot_a].position;
        out.excluded_pairs = ker.excluded;
        // phase e^{i (k - k') rho} with rho = -m a_n contributes e^{-2 pi i d m / N}
        const std::int64_t mm = ((static_cast<std::int64_t>(m) % nk) + nk) % nk;
        cplx total{};
        for (std::size_t ip = 0; ip < ker.band_pairs.size(); ++ip) {
            const auto& s = ker.sums[ip];
            cplx acc{};
            for (int d = 0; d < nk; ++d) {
                const std::int64_t idx = (static_cast<std::int64_t>(d) * mm) % nk;
                acc += s[d] * twiddle(idx, nk);
            }
            acc *= pref;
            total += acc;
            out.contributions.push_back({ker.band_pairs[ip].first, ker.band_pairs[ip].second, acc.real()});
        }
        out.J = total.real();
        out.imag_residue = std::abs(total.imag());
        const double rounding = 64.0 * std::numeric_limits<double>::epsilon() * pref * ker.magnitude;
        if (out.imag_residue > 1e-12 * std::abs(out.J) + rounding)
            throw NumericalError("coupling has a non-negligible imaginary part (" +
                                 std::to_string(out.imag_residue) + ")");
        return out;
    }

    CouplingValue at(const OrbitalPair& op) const { return evaluate(kernel(op.slot_a, op.slot_b), op.cell); }

private:
    static cplx twiddle(std::int64_t idx, int nk) {
        return std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(idx) / nk);
    }

    long accumulate(int p, int q, int row_begin, int row_end, const Eigen::MatrixXcd& w_up,
                    const Eigen::MatrixXcd& w_dn, std::vector<cplx>& s) const {
        const int nk = num_k();
        const double eps = cfg_.degenerate_eps;
        const double* eq = &down_.energies(q, 0);
        const Eigen::Index stride = down_.energies.rows();
        std::vector<double> e_dn(static_cast<std::size_t>(nk)), f_dn(static_cast<std::size_t>(nk));
        std::vector<cplx> b(static_cast<std::size_t>(nk));
        for (int j = 0; j < nk; ++j) {
            e_dn[j] = eq[j * stride];
            f_dn[j] = occ_dn_(q, j);
            b[j] = w_dn(q, j);
        }
        const bool dn_uniform = std::all_of(f_dn.begin(), f_dn.end(), [&](double f) { return f == f_dn[0]; });
        const auto [lo, hi] = std::minmax_element(e_dn.begin(), e_dn.end());
        long excluded = 0;
        for (int j = row_begin; j < row_end; ++j) {
            const double ep = up_.energies(p, j);
            const double fp = occ_up_(p, j);
            const cplx a = w_up(p, j);
            if (dn_uniform && fp == f_dn[0]) continue;
            if (dn_uniform && (ep < *lo - eps || ep > *hi + eps)) {
                // gapped fast path: no degenerate denominators in this row
                const double df = fp - f_dn[0];
                for (int jp = 0; jp <= j; ++jp) s[j - jp] += a * b[jp] * (df / (ep - e_dn[jp]));
                for (int jp = j + 1; jp < nk; ++jp) s[j - jp + nk] += a * b[jp] * (df / (ep - e_dn[jp]));
                continue;
            }
            for (int jp = 0; jp < nk; ++jp) {
                const double df = fp - f_dn[jp];
                if (df == 0.0) continue;
                const double de = ep - e_dn[jp];
                if (std::abs(de) < eps) {
                    ++excluded;
                    continue;
                }
                const int d = j >= jp ? j - jp : j - jp + nk;
                s[d] += a * b[jp] * (df / de);
            }
        }
        return excluded;
    }

    BandStructure up_;
    BandStructure down_;
    ComputeConfig cfg_;
    UnitCell cell_;
    Eigen::MatrixXd occ_up_;
    Eigen::MatrixXd occ_dn_;
};

/// J_ab(R) from the band decomposition, with the I^{pq} contributions.
inline CouplingValue coupling_band_sum(const CouplingEngine& engine, SitePair pair, double R) {
    return engine.at(resolve_separation(engine.spec(), pair, R));
}

inline CouplingValue coupling_band_sum(const ChainSpec& spec, SitePair pair, double R, const ComputeConfig& cfg) {
    const OrbitalPair op = resolve_separation(spec, pair, R);
    return CouplingEngine::from_spec(spec, cfg).at(op);
}

// --- real-space oracle -----------------------------------------------------

namespace detail {

inline double broadened_occupation(double e, double mu, double eta) {
    return 0.5 + std::atan((mu - e) / eta) / std::numbers::pi;
}

} // namespace detail

/// J_ab(R) on a finite chain from exact eigenpairs of both spin sectors. For
/// open chains the pair is centred in the chain.
inline double coupling_oracle_realspace(const ChainSpec& spec, SitePair pair, double R, int num_cells,
                                        Boundary boundary, const ComputeConfig& cfg) {
    validate(spec);
    validate(cfg, spec.t);
    const OrbitalPair op = resolve_separation(spec, pair, R);
    int cell_a = 0;
    int cell_b = op.cell;
    if (boundary == Boundary::Periodic) {
        cell_b = ((op.cell % num_cells) + num_cells) % num_cells;
    } else {
        cell_a = (num_cells - op.cell) / 2;
        cell_b = cell_a + op.cell;
        if (cell_a < 0 || cell_b >= num_cells)
            throw ValidationError("open chain too short for separation R = " + std::to_string(R));
    }
    const int ia = site_index(spec, cell_a, op.slot_a);
    const int ib = site_index(spec, cell_b, op.slot_b);

    auto solve = [&](Spin s) {
        const Eigen::MatrixXd h(real_space_hamiltonian(spec, num_cells, boundary, s));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        if (es.info() != Eigen::Success) throw NumericalError("real-space eigensolver failed");
        return es;
    };
    const auto up = solve(Spin::Up);
    const auto dn = solve(Spin::Down);
    const Eigen::VectorXd x = up.eigenvectors().row(ia).transpose().cwiseProduct(up.eigenvectors().row(ib).transpose());
    const Eigen::VectorXd y = dn.eigenvectors().row(ia).transpose().cwiseProduct(dn.eigenvectors().row(ib).transpose());
    const Eigen::VectorXd& eu = up.eigenvalues();
    const Eigen::VectorXd& ed = dn.eigenvalues();
    const Eigen::Index dim = eu.size();
    Eigen::VectorXd fu(dim), fd(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        fu(i) = detail::broadened_occupation(eu(i), cfg.mu, cfg.eta);
        fd(i) = detail::broadened_occupation(ed(i), cfg.mu, cfg.eta);
    }
    double sum = 0.0;
    for (Eigen::Index nidx = 0; nidx < dim; ++nidx) {
        double row = 0.0;
        for (Eigen::Index midx = 0; midx < dim; ++midx) {
            const double de = eu(nidx) - ed(midx);
            double kern;
            if (std::abs(de) < cfg.degenerate_eps) {
                const double u = cfg.mu - eu(nidx);
                kern = -cfg.eta / (std::numbers::pi * (u * u + cfg.eta * cfg.eta));
            } else {
                kern = (fu(nidx) - fd(midx)) / de;
            }
            row += y(midx) * kern;
        }
        sum += x(nidx) * row;
    }
    return spec.js * spec.js / 2.0 * sum;
}

/// Oracle value at num_cells together with the value at 2*num_cells; throws
/// NumericalError when they differ by more than 1 %.
inline std::pair<double, double> coupling_oracle_size_check(const ChainSpec& spec, SitePair pair, double R,
                                                            int num_cells, Boundary boundary,
                                                            const ComputeConfig& cfg) {
    const double j1 = coupling_oracle_realspace(spec, pair, R, num_cells, boundary, cfg);
    const double j2 = coupling_oracle_realspace(spec, pair, R, 2 * num_cells, boundary, cfg);
    if (std::abs(j1 - j2) > 0.01 * std::max(std::abs(j2), cfg.coupling_floor))
        throw NumericalError("insufficient system size: doubling the chain changes J by more than 1%");
    return {j1, j2};
}

// --- curves ------------------------------------------------------------------

enum class EntryStatus { Converged = 1, Unconverged = 0, Unresolved = -1 };

struct CouplingEntry {
    double R = 0.0;
    int slot_b = 0;
    int cell = 0;
    double J = 0.0;       ///< at config.num_k
    double J_check = 0.0; ///< at 2 * config.num_k
    EntryStatus status = EntryStatus::Unconverged;
    std::vector<Contribution> contributions;

    bool converged() const { return status == EntryStatus::Converged; }
};

struct CouplingTable {
    ChainSpec spec;
    SitePair pair;
    int num_k = 0;
    int num_k_check = 0;
    std::vector<CouplingEntry> entries;
    long excluded_pairs = 0;
    double max_imag_residue = 0.0;
};

/// J_ab(R) for every allowed 0 <= R <= r_max. Each value is recomputed on a
/// mesh twice as fine; entries stable to 0.5 % are flagged converged, and
/// entries below the coupling floor are flagged unresolved.
inline CouplingTable coupling_curve(const ChainSpec& spec, SitePair pair, double r_max, const ComputeConfig& cfg,
                                    bool with_contributions = false) {
    validate(spec);
    validate(cfg, spec.t);
    if (r_max < 3.0 * spec.cell_length() - 1e-12) throw ValidationError("r_max must cover at least 3 unit cells");
    const double max_r = (cfg.num_k / 2 - 1) * spec.cell_length();
    if (r_max > max_r) throw ValidationError("r_max exceeds half the periodic chain; increase num_k");

    ComputeConfig fine = cfg;
    fine.num_k = 2 * cfg.num_k;
    const CouplingEngine coarse_engine = CouplingEngine::from_spec(spec, cfg);
    const CouplingEngine fine_engine = CouplingEngine::from_spec(spec, fine);

    CouplingTable table;
    table.spec = spec;
    table.pair = pair;
    table.num_k = cfg.num_k;
    table.num_k_check = fine.num_k;
    const auto seps = allowed_separations(spec, pair, r_max);

    std::vector<int> slots_b;
    for (const auto& s : seps)
        if (std::find(slots_b.begin(), slots_b.end(), s.slot_b) == slots_b.end()) slots_b.push_back(s.slot_b);

    table.entries.resize(seps.size());
    for (int sb : slots_b) {
        const auto kc = coarse_engine.kernel(seps.front().slot_a, sb);
        const auto kf = fine_engine.kernel(seps.front().slot_a, sb);
        table.excluded_pairs += kc.excluded + kf.excluded;
        for (std::size_t i = 0; i < seps.size(); ++i) {
            if (seps[i].slot_b != sb) continue;
            const auto vc = coarse_engine.evaluate(kc, seps[i].cell);
            const auto vf = fine_engine.evaluate(kf, seps[i].cell);
            auto& e = table.entries[i];
            e.R = seps[i].R;
            e.slot_b = sb;
            e.cell = seps[i].cell;
            e.J = vc.J;
            e.J_check = vf.J;
            if (with_contributions) e.contributions = vc.contributions;
            if (std::abs(vc.J) < cfg.coupling_floor || std::abs(vf.J) < cfg.coupling_floor)
                e.status = EntryStatus::Unresolved;
            else if (std::abs(vc.J - vf.J) <= 0.005 * std::abs(vf.J))
                e.status = EntryStatus::Converged;
            else
                e.status = EntryStatus::Unconverged;
            table.max_imag_residue = std::max({table.max_imag_residue, vc.imag_residue, vf.imag_residue});
        }
    }
    return table;
}

} // namespace flatex
