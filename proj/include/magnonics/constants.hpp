// constants.hpp — physical constants and the project-wide unit convention.
//
// Unit convention: every frequency, rate, and coupling in this library is an
// ordinary frequency (the "/2pi" value) in Hz. Static fields are in tesla,
// powers in watts, volumes in m^3. Formulas that genuinely need angular
// frequencies convert locally via angular()/ordinary(); those two helpers are
// the only place the 2*pi factor lives.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace magnonics {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Ordinary frequency (Hz) -> angular frequency (rad/s).
constexpr double angular(double ordinary_hz) { return two_pi * ordinary_hz; }

/// Angular frequency (rad/s) -> ordinary frequency (Hz).
constexpr double ordinary(double angular_rad_per_s) { return angular_rad_per_s / two_pi; }

/// Power in dBm -> watts.
inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

/// Amplitude ratio -> dB (20 log10 |x|).
inline double to_db(double magnitude) { return 20.0 * std::log10(magnitude); }

/// dB -> amplitude ratio.
inline double from_db(double db) { return std::pow(10.0, db / 20.0); }

/// Fundamental constants (SI). Defaults are CODATA values; gamma_e is the
/// ordinary-frequency electron gyromagnetic ratio, 28.0 GHz/T.
struct PhysicalConstants {
    double h_bar = 1.054571817e-34;      // reduced Planck constant, J*s
    double k_B = 1.380649e-23;           // Boltzmann constant, J/K
    double mu_0 = 1.25663706212e-6;      // vacuum permeability, T*m/A
    double epsilon_0 = 8.8541878128e-12; // vacuum permittivity, F/m
    double mu_B = 9.2740100783e-24;      // Bohr magneton, J/T
    double gamma_e = 28.0e9;             // electron gyromagnetic ratio, Hz/T
    double spin_per_ion = 2.5;           // ferric-ion spin s = 5/2
    double lambda_ex = 3.0e-16;          // exchange constant, m^2

    /// Full (non-reduced) Planck constant, J*s.
    [[nodiscard]] double planck() const { return two_pi * h_bar; }

    /// Throws std::invalid_argument unless every constant is strictly positive.
    void validate() const {
        const double vals[] = {h_bar, k_B, mu_0, epsilon_0, mu_B, gamma_e, spin_per_ion, lambda_ex};
        for (double v : vals) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw std::invalid_argument("PhysicalConstants: all constants must be strictly positive and finite");
            }
        }
    }
};

} // namespace magnonics
