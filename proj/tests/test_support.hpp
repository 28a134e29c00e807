// test_support.hpp — shared fixtures and independent oracles for the suite.
//
// The parameter sets here are the four measured configurations (cryogenic and
// room temperature, fundamental and second cavity mode) used throughout the
// tests, with representative dispersion offsets so the two crossings sit at
// distinct fields.
//
// The eigenvalue oracle below is intentionally independent of the library's
// Jacobi solver: it builds the characteristic polynomial coefficients
// directly from the matrix entries and brackets each root by bisection.

#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "magnonics/magnonics.hpp"

namespace testsup {

using magnonics::CavityMode;
using magnonics::HybridSystem;
using magnonics::MagnonMode;
using magnonics::SpectrumMap;
using magnonics::SweepGrid;

// --- Table-1 style fixtures -------------------------------------------------

inline HybridSystem te101_cryo() {
    HybridSystem s;
    s.cavity = {"TE101", 8.855e9, 0.19e6, 0.20e6, 0.71e6};
    s.magnons = {{"FMR", 5.4e6, 1.2e6, 28.0e9, 0.006, {}}, {"MS", 1.4e6, 2.7e6, 28.0e9, 0.012, {}}};
    return s;
}

inline HybridSystem te102_cryo() {
    HybridSystem s;
    s.cavity = {"TE102", 10.306e9, 0.85e6, 0.99e6, 0.56e6};
    s.magnons = {{"FMR", 7.5e6, 1.3e6, 28.0e9, 0.006, {}}, {"MS", 8.3e6, 3.3e6, 28.0e9, 0.012, {}}};
    return s;
}

inline HybridSystem te101_room() {
    HybridSystem s;
    s.cavity = {"TE101", 8.822e9, 0.19e6, 0.20e6, 2.11e6};
    s.magnons = {{"FMR", 5.2e6, 1.3e6, 28.0e9, 0.006, {}}};
    return s;
}

inline HybridSystem te102_room() {
    HybridSystem s;
    s.cavity = {"TE102", 10.265e9, 0.85e6, 0.99e6, 4.06e6};
    s.magnons = {{"FMR", 9.6e6, 1.5e6, 28.0e9, 0.006, {}}};
    return s;
}

/// Room-temperature second mode with the cryogenic MS mode attached: the
/// configuration of the damping-sweep study.
inline HybridSystem fig4_system() {
    HybridSystem s = te102_room();
    s.magnons.push_back({"MS", 8.3e6, 3.3e6, 28.0e9, 0.012, {}});
    return s;
}

/// Grid spanning every crossing of the system with some field margin, and a
/// frequency window around the cavity line wide enough for the splittings.
inline SweepGrid grid_for(const HybridSystem& s, std::size_t n_fields = 201, std::size_t n_freqs = 201,
                          double field_margin_t = 0.008) {
    double b_lo = 1e9, b_hi = -1e9, g_max = 0.0;
    for (const auto& m : s.magnons) {
        const double bx = s.cavity.omega_c / m.dispersion_slope + m.dispersion_offset;
        b_lo = std::min(b_lo, bx);
        b_hi = std::max(b_hi, bx);
        g_max = std::max(g_max, m.g_tilde);
    }
    if (s.magnons.empty()) {
        b_lo = b_hi = s.cavity.omega_c / 28.0e9;
    }
    const double f_half = std::max(0.025e9, 4.0 * g_max);
    SweepGrid grid;
    grid.field_values = magnonics::linspace(b_lo - field_margin_t, b_hi + field_margin_t, n_fields);
    grid.freq_values =
        magnonics::linspace(s.cavity.omega_c - f_half, s.cavity.omega_c + f_half, n_freqs);
    return grid;
}

// --- Deterministic Gaussian noise -------------------------------------------

inline double gaussian(std::mt19937_64& rng) {
    // Box-Muller on uniform doubles built from the top 53 bits
    const double u1 = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    const double u2 = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(magnonics::two_pi * u2);
}

/// Multiplies every cell by 10^(n/20) with n ~ N(0, sigma_db).
inline void add_db_noise(SpectrumMap& map, double sigma_db, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (auto& v : map.values) v *= magnonics::from_db(sigma_db * gaussian(rng));
}

// --- Independent eigenvalue oracles -----------------------------------------

/// Eigenvalues of a symmetric 2x2, analytic.
inline std::vector<double> eigen2_analytic(double a, double b, double d) {
    const double mean = 0.5 * (a + d);
    const double disc = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return {mean - disc, mean + disc};
}

/// Eigenvalues of a symmetric 3x3 by characteristic-polynomial bisection.
/// Assumes distinct roots (strict sign changes across the critical points).
inline std::vector<double> eigen3_bisection(const magnonics::SquareMatrix& m) {
    if (m.n != 3) throw std::invalid_argument("eigen3_bisection: need a 3x3 matrix");
    const double a = m.at(0, 0), b = m.at(0, 1), c = m.at(0, 2);
    const double d = m.at(1, 1), e = m.at(1, 2), f = m.at(2, 2);

    // p(x) = x^3 - c2 x^2 + c1 x - c0 (monic, real roots for symmetric input)
    const double c2 = a + d + f;
    const double c1 = a * d - b * b + a * f - c * c + d * f - e * e;
    const double c0 = a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c);
    auto p = [&](double x) { return ((x - c2) * x + c1) * x - c0; };

    // Gershgorin bounds
    const double r0 = std::abs(b) + std::abs(c);
    const double r1 = std::abs(b) + std::abs(e);
    const double r2 = std::abs(c) + std::abs(e);
    double lo = std::min({a - r0, d - r1, f - r2}) - 1.0;
    double hi = std::max({a + r0, d + r1, f + r2}) + 1.0;

    // critical points of the cubic partition the axis into monotone pieces
    const double disc = c2 * c2 - 3.0 * c1;
    if (!(disc > 0.0)) {
        // (near-)triple root
        return {c2 / 3.0, c2 / 3.0, c2 / 3.0};
    }
    const double s = std::sqrt(disc);
    const double x1 = (c2 - s) / 3.0;
    const double x2 = (c2 + s) / 3.0;

    auto bisect = [&](double xa, double xb) {
        double fa = p(xa);
        for (int it = 0; it < 200; ++it) {
            const double xm = 0.5 * (xa + xb);
            if (xm == xa || xm == xb) break;
            const double fm = p(xm);
            if ((fa <= 0.0) == (fm <= 0.0)) {
                xa = xm;
                fa = fm;
            } else {
                xb = xm;
            }
        }
        return 0.5 * (xa + xb);
    };

    return {bisect(lo, x1), bisect(x1, x2), bisect(x2, hi)};
}

} // namespace testsup
