// transmission.hpp — two-port transmission coefficient of the cavity dressed
// by magnon modes, in the standard input-output form
//
//     S21(w) = 2 sqrt(k_in k_out) / (i (w - w_c) - k_tot + Sigma(w))
//     Sigma(w) = sum_m g_m^2 / (i (w - w_m(B)) - gamma_m)
//
// evaluated uniformly in ordinary-frequency units (Hz); the expression is
// invariant under dividing every frequency and rate by 2*pi, so tabulated
// "/2pi" values plug in directly. k_tot is the half-width at half-maximum of
// the bare power response. Re Sigma <= 0 always, which keeps the denominator
// bounded away from zero whenever k_tot > 0.

#pragma once

#include <complex>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "magnonics/model.hpp"

namespace magnonics {

/// Raised when the transmission model is evaluated with kappa_tot = 0.
class singular_model_error : public model_error {
  public:
    using model_error::model_error;
};

/// Complex S21 value with its dB magnitude (20 log10 |value|).
struct ComplexResponse {
    std::complex<double> value;
    double magnitude_db = 0.0;

    static ComplexResponse from_value(std::complex<double> v) { return {v, to_db(std::abs(v))}; }
};

/// Magnon self-energy at one probe frequency and field, Hz. Empty list gives 0.
inline std::complex<double> self_energy(std::span<const MagnonMode> magnons, double probe_freq_hz, double field_t) {
    std::complex<double> sigma{0.0, 0.0};
    for (const auto& m : magnons) {
        if (!(m.gamma_m > 0.0)) {
            throw std::invalid_argument("self_energy: gamma_m must be strictly positive (magnon '" + m.label + "')");
        }
        const double detuning = probe_freq_hz - m.frequency_at(field_t);
        const double g2 = m.g_tilde * m.g_tilde;
        const double denom = detuning * detuning + m.gamma_m * m.gamma_m;
        sigma += std::complex<double>(-g2 * m.gamma_m / denom, -g2 * detuning / denom);
    }
    return sigma;
}

/// Transmission coefficient at one probe frequency and static field.
inline ComplexResponse s21(const HybridSystem& system, double probe_freq_hz, double field_t) {
    const auto& c = system.cavity;
    if (!(c.kappa_tot() > 0.0)) {
        throw singular_model_error("s21: kappa_tot must be strictly positive (cavity '" + c.label + "')");
    }
    const std::complex<double> sigma = self_energy(system.magnons, probe_freq_hz, field_t);
    const std::complex<double> denominator(-c.kappa_tot() + sigma.real(), (probe_freq_hz - c.omega_c) + sigma.imag());
    const double numerator = 2.0 * std::sqrt(c.kappa_in * c.kappa_out);
    return ComplexResponse::from_value(numerator / denominator);
}

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void annotate_with_system(std::map<std::string, std::string>& meta, const HybridSystem& system) {
    const auto& c = system.cavity;
    meta["cavity.label"] = c.label;
    meta["cavity.omega_c_hz"] = format_double(c.omega_c);
    meta["cavity.kappa_in_hz"] = format_double(c.kappa_in);
    meta["cavity.kappa_out_hz"] = format_double(c.kappa_out);
    meta["cavity.kappa_int_hz"] = format_double(c.kappa_int);
    for (const auto& m : system.magnons) {
        const std::string p = "magnon." + m.label + ".";
        meta[p + "g_tilde_hz"] = format_double(m.g_tilde);
        meta[p + "gamma_hz"] = format_double(m.gamma_m);
        meta[p + "dispersion_slope_hz_per_t"] = format_double(m.dispersion_slope);
        meta[p + "dispersion_offset_t"] = format_double(m.dispersion_offset);
    }
}

} // namespace detail

/// Full 2-D transmission map over the grid. Metadata records the system
/// parameters the map was generated from.
inline SpectrumMap spectrum_map(const HybridSystem& system, const SweepGrid& grid) {
    require_valid(system);
    grid.validate();

    SpectrumMap map;
    map.grid = grid;
    map.values.resize(grid.field_values.size() * grid.freq_values.size());
    detail::annotate_with_system(map.metadata, system);
    map.metadata["source"] = "simulated";

    const std::size_t nf = grid.freq_values.size();
    for (std::size_t i = 0; i < grid.field_values.size(); ++i) {
        const double b = grid.field_values[i];
        for (std::size_t j = 0; j < nf; ++j) {
            try {
                map.values[i * nf + j] = s21(system, grid.freq_values[j], b).value;
            } catch (const std::exception& err) {
                std::ostringstream msg;
                msg << "spectrum_map: at B = " << b << " T, f = " << grid.freq_values[j] << " Hz: " << err.what();
                throw model_error(msg.str());
            }
        }
    }
    return map;
}

/// dB magnitude map without metadata, row-major [field][freq]. This is the
/// hot path shared by the fitter; one log10 per grid cell.
inline std::vector<double> magnitude_db_map(const HybridSystem& system, const SweepGrid& grid) {
    const auto& c = system.cavity;
    if (!(c.kappa_tot() > 0.0)) {
        throw singular_model_error("magnitude_db_map: kappa_tot must be strictly positive");
    }
    const std::size_t nb = grid.field_values.size();
    const std::size_t nf = grid.freq_values.size();
    std::vector<double> db(nb * nf);

    const double num_db = 10.0 * std::log10(4.0 * c.kappa_in * c.kappa_out);
    const double ktot = c.kappa_tot();
    const std::size_t nm = system.magnons.size();
    std::vector<double> wm(nm), g2(nm), gm(nm);

    for (std::size_t i = 0; i < nb; ++i) {
        const double b = grid.field_values[i];
        for (std::size_t m = 0; m < nm; ++m) {
            wm[m] = system.magnons[m].frequency_at(b);
            g2[m] = system.magnons[m].g_tilde * system.magnons[m].g_tilde;
            gm[m] = system.magnons[m].gamma_m;
        }
        double* row = db.data() + i * nf;
        for (std::size_t j = 0; j < nf; ++j) {
            const double w = grid.freq_values[j];
            double re = -ktot;
            double im = w - c.omega_c;
            for (std::size_t m = 0; m < nm; ++m) {
                const double det = w - wm[m];
                const double inv = g2[m] / (det * det + gm[m] * gm[m]);
                re -= gm[m] * inv;
                im -= det * inv;
            }
            row[j] = num_db - 10.0 * std::log10(re * re + im * im);
        }
    }
    return db;
}

/// One map per multiplier, scaling the named magnon's damping rate and
/// leaving everything else untouched.
inline std::vector<SpectrumMap> damping_sweep(const HybridSystem& system, const std::string& magnon_label,
                                              std::span<const double> multipliers, const SweepGrid& grid) {
    require_valid(system);
    std::size_t target = system.magnons.size();
    for (std::size_t m = 0; m < system.magnons.size(); ++m) {
        if (system.magnons[m].label == magnon_label) {
            target = m;
            break;
        }
    }
    if (target == system.magnons.size()) {
        throw std::invalid_argument("damping_sweep: no magnon labeled '" + magnon_label + "'");
    }
    for (double mult : multipliers) {
        if (!(mult > 0.0)) throw std::invalid_argument("damping_sweep: multipliers must be positive");
    }

    std::vector<SpectrumMap> maps;
    maps.reserve(multipliers.size());
    for (double mult : multipliers) {
        HybridSystem scaled = system;
        scaled.magnons[target].gamma_m *= mult;
        SpectrumMap map = spectrum_map(scaled, grid);
        map.metadata["damping_sweep.target"] = magnon_label;
        map.metadata["damping_sweep.multiplier"] = detail::format_double(mult);
        maps.push_back(std::move(map));
    }
    return maps;
}

} // namespace magnonics
