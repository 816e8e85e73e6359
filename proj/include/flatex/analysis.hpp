#pragma once

// Decay-law fits, the xi-vs-<g> study across dilute stub chains, n_c
// detection and the (alpha, JS) amplification scan.
//
// All fits are linear least squares in log space:
//   Exponential       ln|J| = ln|A| - R/xi
//   ExponentialSqrtR  ln(|J| sqrt R) = ln|A| - R/xi
//   PowerLaw          ln|J| = ln|C| - p ln R

#include "flatex/couplings.hpp"
#include "flatex/qmetric.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace flatex {

enum class FitModel { Exponential, PowerLaw, ExponentialSqrtR };

inline std::string to_string(FitModel m) {
    switch (m) {
    case FitModel::Exponential: return "exponential";
    case FitModel::PowerLaw: return "powerlaw";
    default: return "exponential_sqrt";
    }
}

inline FitModel parse_fit_model(const std::string& s) {
    if (s == "exponential" || s == "exp") return FitModel::Exponential;
    if (s == "powerlaw" || s == "power") return FitModel::PowerLaw;
    if (s == "exponential_sqrt" || s == "exp_sqrt") return FitModel::ExponentialSqrtR;
    throw ValidationError("unknown fit model '" + s + "'");
}

/// Raised when a curve cannot be fitted (too few points, non-monotone data).
class FitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct FitResult {
    FitModel model = FitModel::Exponential;
    double amplitude = 0.0;       ///< A or C, carries the sign of J
    double amplitude_error = 0.0;
    double xi = 0.0;              ///< +inf when the slope vanishes (exponential models)
    double xi_error = 0.0;
    double exponent = 0.0;        ///< p (power law)
    double exponent_error = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
    int points = 0;
    double residual_norm = 0.0;   ///< in log space
    double r_squared = 1.0;
    bool accepted = false;        ///< r_squared >= 0.999
};

struct FitOptions {
    std::optional<double> r_min;      ///< in addition to the 3 a_n cut
    std::optional<double> r_max;
    double coupling_floor = 1e-14;
    double min_cells = 3.0;
};

/// Fits pre-selected points. Requires at least 5 points and |J| that never
/// grows with R.
inline FitResult fit_points(const std::vector<double>& R, const std::vector<double>& J, FitModel model) {
    const std::size_t n = R.size();
    if (n != J.size()) throw ValidationError("fit: R and J size mismatch");
    if (n < 5) throw FitError("fit needs at least 5 points, got " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!(R[i] > 0.0) || J[i] == 0.0 || !std::isfinite(J[i])) throw FitError("fit: invalid point");
        if (i > 0 && !(R[i] > R[i - 1])) throw FitError("fit: R must be strictly increasing");
        if (i > 0 && std::abs(J[i]) > std::abs(J[i - 1]) * (1.0 + 1e-12))
            throw FitError("fit: |J| is not monotone in the window (R = " + std::to_string(R[i]) + ")");
        if ((J[i] > 0) != (J[0] > 0)) throw FitError("fit: J changes sign in the window");
    }

    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = model == FitModel::PowerLaw ? std::log(R[i]) : R[i];
        y[i] = std::log(std::abs(J[i]));
        if (model == FitModel::ExponentialSqrtR) y[i] += 0.5 * std::log(R[i]);
    }
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
        syy += (y[i] - ym) * (y[i] - ym);
    }
    const double slope = sxy / sxx;
    const double intercept = ym - slope * xm;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (intercept + slope * x[i]);
        ssr += r * r;
    }
    const double s2 = ssr / static_cast<double>(n - 2);
    const double se_slope = std::sqrt(s2 / sxx);
    const double se_icpt = std::sqrt(s2 * (1.0 / static_cast<double>(n) + xm * xm / sxx));

    FitResult f;
    f.model = model;
    f.points = static_cast<int>(n);
    f.r_min = R.front();
    f.r_max = R.back();
    f.residual_norm = std::sqrt(ssr);
    f.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
    f.accepted = f.r_squared >= 0.999;
    const double sign = J.front() < 0 ? -1.0 : 1.0;
    f.amplitude = sign * std::exp(intercept);
    f.amplitude_error = std::exp(intercept) * se_icpt;
    if (model == FitModel::PowerLaw) {
        f.exponent = -slope;
        f.exponent_error = se_slope;
    } else if (slope == 0.0) {
        f.xi = std::numeric_limits<double>::infinity();
        f.xi_error = 0.0;
    } else {
        f.xi = -1.0 / slope;
        f.xi_error = se_slope / (slope * slope);
    }
    return f;
}

/// Window: R >= min_cells * a_n (and >= r_min), then the contiguous run of
/// converged entries with |J| >= 10 * floor, capped at r_max.
inline FitResult fit_decay(const CouplingTable& table, FitModel model, const FitOptions& opt = {}) {
    const double lo = std::max(opt.min_cells * table.spec.cell_length(), opt.r_min.value_or(0.0)) - 1e-12;
    const double hi = opt.r_max.value_or(std::numeric_limits<double>::infinity()) + 1e-12;
    std::vector<const CouplingEntry*> sorted;
    for (const auto& e : table.entries)
        if (e.R >= lo && e.R <= hi) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->R < b->R; });
    std::vector<double> R, J;
    for (const auto* e : sorted) {
        if (!e->converged() || std::abs(e->J) < 10.0 * opt.coupling_floor) break;
        R.push_back(e->R);
        J.push_back(e->J);
    }
    return fit_points(R, J, model);
}

// --- xi vs <g> -----------------------------------------------------------------

struct XiVsGRow {
    int n = 0;
    double g_avg = 0.0;                 ///< units of a^2
    std::optional<FitResult> fit;       ///< empty when the fit failed
    std::string error;
    std::optional<double> local_slope;  ///< d ln xi / d ln <g> against the previous row

    double xi() const { return fit ? fit->xi : std::numeric_limits<double>::quiet_NaN(); }
};

struct StudyConfig {
    ComputeConfig compute{.num_k = 256};
    int max_cells = 40;     ///< R_max = max_cells * a_n (capped by the mesh)
    int metric_num_k = 1024;
};

/// Stub chains Sb[n] for each n in n_list (ascending).
inline std::vector<XiVsGRow> xi_vs_g_study(double alpha, const std::vector<int>& n_list, double js,
                                           const StudyConfig& cfg = {}) {
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1]) throw ValidationError("n_list must be strictly ascending");
    std::vector<XiVsGRow> rows;
    for (int n : n_list) {
        const ChainSpec spec = stub(n, alpha, js);
        XiVsGRow row;
        row.n = n;
        row.g_avg = quantum_metric(spec, cfg.metric_num_k).g_avg_over_a2();
        const int cells = std::min(cfg.max_cells, cfg.compute.num_k / 2 - 1);
        try {
            const auto table = coupling_curve(spec, {Sublattice::B, Sublattice::B}, cells * spec.cell_length(), cfg.compute);
            FitOptions fo;
            fo.coupling_floor = cfg.compute.coupling_floor;
            row.fit = fit_decay(table, FitModel::Exponential, fo);
        } catch (const FitError& e) {
            row.error = e.what();
        }
        if (!rows.empty() && rows.back().fit && row.fit)
            row.local_slope = std::log(row.xi() / rows.back().xi()) / std::log(row.g_avg / rows.back().g_avg);
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Least-squares slope of ln xi against ln <g> over rows with n in [n_lo, n_hi].
inline std::optional<double> scaling_slope(const std::vector<XiVsGRow>& rows, int n_lo, int n_hi) {
    std::vector<double> x, y;
    for (const auto& r : rows)
        if (r.n >= n_lo && r.n <= n_hi && r.fit) {
            x.push_back(std::log(r.g_avg));
            y.push_back(std::log(r.xi()));
        }
    if (x.size() < 2) return std::nullopt;
    double xm = 0, ym = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= static_cast<double>(x.size());
    ym /= static_cast<double>(x.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    return sxy / sxx;
}

struct NcEstimate {
    std::optional<int> n_c;  ///< empty when both regimes are not present
    int uncertainty = 1;
    std::string note;
};

/// First n whose local slope reaches 5/12, provided an earlier slope sits
/// below it.
inline NcEstimate detect_nc(const std::vector<XiVsGRow>& rows) {
    constexpr double threshold = 5.0 / 12.0;
    NcEstimate est;
    bool below = false;
    for (const auto& r : rows) {
        if (!r.local_slope) continue;
        if (*r.local_slope < threshold) {
            below = true;
        } else if (below) {
            est.n_c = r.n;
            return est;
        }
    }
    est.note = below ? "slope never reaches 5/12: large-n regime absent" : "no small-n regime below 5/12";
    return est;
}

// --- amplification scan ----------------------------------------------------------

struct ScanCell {
    double alpha = 0.0;
    double js = 0.0;
    double j10_a10 = 0.0;  ///< J^[10]_BB(a_10)
    double j1_a = 0.0;     ///< J^[1]_BB(a)
    double j1_10a = 0.0;   ///< J^[1]_BB(10 a)
    std::optional<double> ratio;               ///< J^[10](a_10) / J^[1](a)
    std::optional<double> ratio_same_distance; ///< J^[10](a_10) / J^[1](10 a)
    std::optional<double> j10_a10_kelvin;
    std::optional<double> j1_10a_kelvin;
};

struct ScanResult {
    std::vector<double> alpha_grid;
    std::vector<double> js_grid;
    std::vector<ScanCell> cells;  ///< alpha-major: cells[i * js_grid.size() + j]
    std::optional<double> t_ev;
    int num_k = 0;

    const ScanCell& at(std::size_t i_alpha, std::size_t i_js) const { return cells[i_alpha * js_grid.size() + i_js]; }
};

inline constexpr double kelvin_per_ev = 11604.5;

inline ScanResult amplification_scan(const std::vector<double>& alpha_grid, const std::vector<double>& js_grid,
                                     const ComputeConfig& cfg, std::optional<double> t_ev = std::nullopt) {
    auto check = [](const std::vector<double>& g, const char* what) {
        if (g.empty()) throw ValidationError(std::string(what) + " grid is empty");
        for (double v : g)
            if (!(v > 0.0 && v <= 2.0)) throw ValidationError(std::string(what) + " grid values must lie in (0, 2]");
    };
    check(alpha_grid, "alpha");
    check(js_grid, "JS");
    if (t_ev && !(*t_ev > 0.0)) throw ValidationError("t in eV must be positive");
    validate(cfg);
    if (cfg.num_k / 2 - 1 < 10) throw ValidationError("scan needs num_k >= 22");

    ScanResult res;
    res.alpha_grid = alpha_grid;
    res.js_grid = js_grid;
    res.t_ev = t_ev;
    res.num_k = cfg.num_k;
    const SitePair bb{Sublattice::B, Sublattice::B};
    for (double alpha : alpha_grid)
        for (double js : js_grid) {
            ScanCell c;
            c.alpha = alpha;
            c.js = js;
            const auto e1 = CouplingEngine::from_spec(stub(1, alpha, js), cfg);
            const auto k1 = e1.kernel(slots::b, slots::b);
            c.j1_a = e1.evaluate(k1, 1).J;
            c.j1_10a = e1.evaluate(k1, 10).J;
            c.j10_a10 = coupling_band_sum(stub(10, alpha, js), bb, 10.0, cfg).J;
            const double floor = cfg.coupling_floor;
            const bool ok10 = std::abs(c.j10_a10) >= floor;
            if (ok10 && std::abs(c.j1_a) >= floor) c.ratio = c.j10_a10 / c.j1_a;
            if (ok10 && std::abs(c.j1_10a) >= floor) c.ratio_same_distance = c.j10_a10 / c.j1_10a;
            if (t_ev) {
                c.j10_a10_kelvin = c.j10_a10 * *t_ev * kelvin_per_ev;
                c.j1_10a_kelvin = c.j1_10a * *t_ev * kelvin_per_ev;
            }
            res.cells.push_back(c);
        }
    return res;
}

} // namespace flatex
