// derived.hpp — scalar quantities derived from the coupled-system parameters:
// single-spin coupling, spin count, cooperativity, photon-number estimators,
// and the validity checks for the magnetostatic and low-excitation regimes.

#pragma once

#include <cmath>
#include <stdexcept>

#include "magnonics/model.hpp"

namespace magnonics {

/// Default ratio demanded of each "much greater than" inequality in the
/// magnetostatic regime check.
inline constexpr double default_regime_ratio = 100.0;

/// Default ceiling on <b+b>/2S below which the non-interacting-magnon
/// (Holstein-Primakoff, low-excitation) description is accepted.
inline constexpr double default_low_excitation_threshold = 1e-3;

/// Magnon frequency at a static field, Hz. Affine dispersion
/// slope * (B - offset); throws std::domain_error on a negative result.
inline double magnon_frequency(const MagnonMode& mode, double field_t) { return mode.frequency_at(field_t); }

/// Coupling of a single spin to the cavity mode, Hz:
///   g = eta * gamma_e * sqrt(hbar * w_c * mu_0 / V_c) / 2
/// with w_c the angular cavity frequency inside the square root and eta the
/// spatial overlap / polarization-matching coefficient in [0, 1].
inline double single_spin_coupling(double eta, double omega_c_hz, double mode_volume_m3,
                                   const PhysicalConstants& constants = {}) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("single_spin_coupling: eta must lie in [0, 1]");
    if (!(mode_volume_m3 > 0.0)) throw std::invalid_argument("single_spin_coupling: mode volume must be positive");
    const double vacuum_field = std::sqrt(constants.h_bar * angular(omega_c_hz) * constants.mu_0 / mode_volume_m3);
    return eta * constants.gamma_e * vacuum_field / 2.0;
}

/// Number of spins behind a collective coupling: N = (g_coll/g_single)^2 / (2 s).
inline double spin_count(double g_collective_hz, double g_single_hz, double spin_per_ion = 2.5) {
    if (!(g_single_hz > 0.0)) throw std::invalid_argument("spin_count: g_single must be strictly positive");
    if (!(spin_per_ion > 0.0)) throw std::invalid_argument("spin_count: spin_per_ion must be strictly positive");
    const double ratio = g_collective_hz / g_single_hz;
    return ratio * ratio / (2.0 * spin_per_ion);
}

/// Cooperativity C = g^2 / (kappa_tot * gamma).
inline double cooperativity(double g_collective_hz, double kappa_tot_hz, double gamma_m_hz) {
    if (!(kappa_tot_hz > 0.0)) throw std::invalid_argument("cooperativity: kappa_tot must be strictly positive");
    if (!(gamma_m_hz > 0.0)) throw std::invalid_argument("cooperativity: gamma_m must be strictly positive");
    return g_collective_hz * g_collective_hz / (kappa_tot_hz * gamma_m_hz);
}

/// Bose-Einstein occupation 1 / (exp(h f / k_B T) - 1). Underflows gracefully
/// to 0 deep in the quantum regime instead of failing.
inline double thermal_photon_number(double freq_hz, double temperature_k, const PhysicalConstants& constants = {}) {
    if (!(freq_hz > 0.0)) throw std::invalid_argument("thermal_photon_number: frequency must be positive");
    if (!(temperature_k > 0.0)) throw std::invalid_argument("thermal_photon_number: temperature must be positive");
    const double x = constants.planck() * freq_hz / (constants.k_B * temperature_k);
    return 1.0 / std::expm1(x);
}

/// Steady-state intracavity photon number under a coherent drive of power P:
///   n = 2 kappa_in * (P / h f) / (2 pi * (Delta^2 + kappa_tot^2))
/// with rates and detuning in Hz. This is the angular-frequency expression
/// n = 2 k_in P / (hbar w (Delta^2 + k_tot^2)) rewritten in ordinary units;
/// the factor 2 on kappa_in is the fixed convention of this library.
inline double drive_photon_number(double input_power_w, double probe_freq_hz, const CavityMode& cavity,
                                  double detuning_hz, const PhysicalConstants& constants = {}) {
    if (!(input_power_w >= 0.0)) throw std::invalid_argument("drive_photon_number: power must be non-negative");
    if (input_power_w == 0.0) return 0.0;
    const double photon_flux = input_power_w / (constants.planck() * probe_freq_hz);
    const double ktot = cavity.kappa_tot();
    return 2.0 * cavity.kappa_in * photon_flux / (two_pi * (detuning_hz * detuning_hz + ktot * ktot));
}

/// Outcome of the magnetostatic-approximation window test
/// k0 << k_MS << 1/sqrt(lambda_ex).
struct RegimeReport {
    double k0 = 0.0;              // propagating wavenumber in the material, rad/m
    double exchange_cutoff = 0.0; // 1/sqrt(lambda_ex), rad/m
    double lower_ratio = 0.0;     // k_MS / k0
    double upper_ratio = 0.0;     // exchange_cutoff / k_MS
    double threshold = default_regime_ratio;
    bool k_ms_lower_ok = false;
    bool k_ms_upper_ok = false;

    [[nodiscard]] bool ok() const { return k_ms_lower_ok && k_ms_upper_ok; }
};

/// Check that a magnetostatic-mode wavenumber sits inside the window where
/// the magnetostatic approximation holds. k0 = 2 pi f sqrt(mu_0 eps_0 eps_r).
inline RegimeReport magnetostatic_regime_check(double probe_freq_hz, double relative_permittivity, double k_ms,
                                               const PhysicalConstants& constants = {},
                                               double threshold = default_regime_ratio) {
    if (!(relative_permittivity >= 1.0)) {
        throw std::invalid_argument("magnetostatic_regime_check: relative permittivity must be >= 1");
    }
    if (!(k_ms > 0.0)) throw std::invalid_argument("magnetostatic_regime_check: k_ms must be positive");
    if (!(probe_freq_hz > 0.0)) throw std::invalid_argument("magnetostatic_regime_check: frequency must be positive");

    RegimeReport report;
    report.threshold = threshold;
    report.k0 = angular(probe_freq_hz) * std::sqrt(constants.mu_0 * constants.epsilon_0 * relative_permittivity);
    report.exchange_cutoff = 1.0 / std::sqrt(constants.lambda_ex);
    report.lower_ratio = k_ms / report.k0;
    report.upper_ratio = report.exchange_cutoff / k_ms;
    report.k_ms_lower_ok = report.lower_ratio >= threshold;
    report.k_ms_upper_ok = report.upper_ratio >= threshold;
    return report;
}

/// Excitation fraction <b+b> / (2 S). Values well below 1 certify the
/// reduction of collective spins to non-interacting magnons.
inline double low_excitation_ratio(double mean_magnon_number, double total_spin) {
    if (!(total_spin > 0.0)) throw std::invalid_argument("low_excitation_ratio: total spin must be positive");
    if (!(mean_magnon_number >= 0.0)) {
        throw std::invalid_argument("low_excitation_ratio: occupation must be non-negative");
    }
    return mean_magnon_number / (2.0 * total_spin);
}

/// Bundle of the coupling "budget" linking a single spin to the collective
/// coupling actually observed.
struct CouplingBudget {
    double g_single = 0.0;     // Hz
    double eta = 0.0;          // dimensionless, [0, 1]
    double mode_volume = 0.0;  // m^3
    double n_spins = 0.0;      // dimensionless
    double g_collective = 0.0; // Hz
    double cooperativity = 0.0;
};

inline CouplingBudget coupling_budget(double eta, double mode_volume_m3, const CavityMode& cavity,
                                      const MagnonMode& magnon, const PhysicalConstants& constants = {}) {
    CouplingBudget budget;
    budget.eta = eta;
    budget.mode_volume = mode_volume_m3;
    budget.g_single = single_spin_coupling(eta, cavity.omega_c, mode_volume_m3, constants);
    budget.g_collective = magnon.g_tilde;
    budget.n_spins = spin_count(magnon.g_tilde, budget.g_single, constants.spin_per_ion);
    budget.cooperativity = cooperativity(magnon.g_tilde, cavity.kappa_tot(), magnon.gamma_m);
    return budget;
}

} // namespace magnonics
