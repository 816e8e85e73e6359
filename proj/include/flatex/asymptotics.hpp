#pragma once

// Closed-form large-distance couplings for the undiluted chains. All values
// are returned with the ferromagnetic (negative) sign. Energies in units of
// t, lengths in units of a.

#include <cmath>
#include <numbers>
#include <string>

namespace flatex::asymptotic {

enum class Regime { StubFlatFlat, StubDispersive, DiamondPowerLaw };

inline std::string to_string(Regime r) {
    switch (r) {
    case Regime::StubFlatFlat: return "stub_fbfb";
    case Regime::StubDispersive: return "stub_dispersive";
    default: return "diamond_powerlaw";
    }
}

struct Prediction {
    Regime regime;
    double J = 0.0;
    double xi = 0.0;       ///< decay length (exponential regimes), units of a
    double exponent = 0.0; ///< power-law exponent (diamond)
    bool valid = false;    ///< inside the stated validity region
};

/// Pole of the flat-band form factor inside the unit circle,
/// z+ = -1 - alpha^2/2 + (alpha/2) sqrt(alpha^2 + 4).
inline double pole(double alpha) { return -1.0 - alpha * alpha / 2.0 + alpha / 2.0 * std::sqrt(alpha * alpha + 4.0); }

/// Exact-pole decay length xi = -a / (2 ln|z+|).
inline double stub_fbfb_xi(double alpha) { return -1.0 / (2.0 * std::log(std::abs(pole(alpha)))); }

inline double stub_fbfb_xi_small_alpha(double alpha) { return 1.0 / (2.0 * alpha); }
inline double stub_fbfb_xi_large_alpha(double alpha) { return 1.0 / (2.0 * std::log(alpha * alpha)); }

/// FB-FB coupling J = -(JS/2) alpha^2/(alpha^2+4) |z+|^(2R); trusted for alpha >= 3|JS|/t.
inline Prediction stub_fbfb(double alpha, double js, double R) {
    Prediction p{Regime::StubFlatFlat};
    p.xi = stub_fbfb_xi(alpha);
    p.J = -std::abs(js) / 2.0 * alpha * alpha / (alpha * alpha + 4.0) * std::pow(std::abs(pole(alpha)), 2.0 * std::abs(R));
    p.valid = alpha >= 3.0 * std::abs(js) * (1.0 - 1e-12);
    return p;
}

/// alpha <= 1 limit: -(JS/8) alpha^2 exp(-2 alpha R).
inline double stub_fbfb_small_alpha(double alpha, double js, double R) {
    return -std::abs(js) / 8.0 * alpha * alpha * std::exp(-std::abs(R) / stub_fbfb_xi_small_alpha(alpha));
}

/// alpha >> 1 limit: -(JS/2) exp(-2 ln(alpha^2) R).
inline double stub_fbfb_large_alpha(double alpha, double js, double R) {
    return -std::abs(js) / 2.0 * std::exp(-std::abs(R) / stub_fbfb_xi_large_alpha(alpha));
}

inline double stub_dispersive_xi(double alpha) { return std::numbers::sqrt2 / (3.0 * alpha); }

/// Dispersive (-,+) regime, alpha << JS/t:
/// J = -(2 alpha^{7/2} / sqrt(2 sqrt2 pi)) (t^2/JS) e^{-R/xi} / sqrt(R), xi = sqrt2/(3 alpha).
/// Trusted for alpha <= |JS|/3 and R >= 3 xi.
inline Prediction stub_dispersive(double alpha, double js, double R) {
    Prediction p{Regime::StubDispersive};
    p.xi = stub_dispersive_xi(alpha);
    const double r = std::abs(R);
    const double amp = 2.0 * std::pow(alpha, 3.5) / std::sqrt(2.0 * std::numbers::sqrt2 * std::numbers::pi);
    p.J = -amp / std::abs(js) * std::exp(-r / p.xi) / std::sqrt(r);
    p.valid = alpha <= std::abs(js) / 3.0 * (1.0 + 1e-12) && r >= 3.0 * p.xi * (1.0 - 1e-12);
    return p;
}

/// Diamond power-law constant C1 = 3 t^2 / (2 pi |JS|).
inline double diamond_constant(double js) { return 3.0 / (2.0 * std::numbers::pi * std::abs(js)); }

/// Validity threshold sqrt(32) t / |JS| (units of a).
inline double diamond_threshold(double js) { return std::sqrt(32.0) / std::abs(js); }

/// J = -C1 / R^4, trusted for R >= sqrt(32) t/|JS|.
inline Prediction diamond_powerlaw(double js, double R) {
    Prediction p{Regime::DiamondPowerLaw};
    p.exponent = 4.0;
    p.J = -diamond_constant(js) / std::pow(std::abs(R), 4);
    p.valid = std::abs(R) >= diamond_threshold(js) * (1.0 - 1e-12);
    return p;
}

/// Sb[1] decay length expressed through the flat-band quantum metric.
struct XiVsMetric {
    double g_avg;       ///< a^2 / (2 alpha sqrt(alpha^2 + 4))
    double xi_small;    ///< 2 <g> / a, alpha << 1 branch
    double xi_large;    ///< -a / (2 ln(2 <g> / a^2)), alpha >> 1 branch
    double xi_exact;    ///< exact pole
    bool large_branch;  ///< alpha > 1 selects the large-alpha branch
    double xi_selected() const { return large_branch ? xi_large : xi_small; }
};

inline XiVsMetric xi_vs_g_reference(double alpha) {
    XiVsMetric r{};
    r.g_avg = 1.0 / (2.0 * alpha * std::sqrt(alpha * alpha + 4.0));
    r.xi_small = 2.0 * r.g_avg;
    r.xi_large = -1.0 / (2.0 * std::log(2.0 * r.g_avg));
    r.xi_exact = stub_fbfb_xi(alpha);
    r.large_branch = alpha > 1.0;
    return r;
}

} // namespace flatex::asymptotic
