// model.hpp — domain types for a driven microwave cavity coupled to
// collective spin (magnon) modes, plus structural validation.
//
// All types are immutable value objects by convention: build them, validate
// them, then share freely across threads.

#pragma once

#include <complex>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "magnonics/constants.hpp"

namespace magnonics {

/// Base class for domain errors raised by this library.
class model_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when an operation receives a HybridSystem that fails validation.
class invalid_system_error : public model_error {
  public:
    using model_error::model_error;
};

/// One cavity resonance with its two port couplings and intrinsic loss.
/// kappa_tot is always derived, never stored.
struct CavityMode {
    std::string label;      // e.g. "TE101"
    double omega_c = 0.0;   // resonance frequency, Hz
    double kappa_in = 0.0;  // input port rate, Hz
    double kappa_out = 0.0; // output port rate, Hz
    double kappa_int = 0.0; // intrinsic loss rate, Hz

    /// Total decay rate kappa_in + kappa_out + kappa_int, Hz.
    [[nodiscard]] double kappa_tot() const { return kappa_in + kappa_out + kappa_int; }
};

/// One collective spin mode. The field-to-frequency dispersion is affine,
/// omega_m(B) = dispersion_slope * (B - dispersion_offset); the offset absorbs
/// mode-dependent effective fields (anisotropy, demagnetization).
struct MagnonMode {
    std::string label;                // e.g. "FMR" or "MS"
    double g_tilde = 0.0;             // collective coupling strength, Hz
    double gamma_m = 0.0;             // damping rate, Hz
    double dispersion_slope = 28.0e9; // Hz per tesla
    double dispersion_offset = 0.0;   // tesla
    std::optional<double> total_spin; // S^(m), when known

    /// Mode frequency at a static field, Hz. Throws std::domain_error when the
    /// operating point would give a negative frequency.
    [[nodiscard]] double frequency_at(double field_t) const {
        const double f = dispersion_slope * (field_t - dispersion_offset);
        if (f < 0.0) {
            std::ostringstream msg;
            msg << "magnon mode '" << label << "': negative frequency at B = " << field_t
                << " T (field below dispersion offset " << dispersion_offset << " T)";
            throw std::domain_error(msg.str());
        }
        return f;
    }
};

/// One cavity mode plus the magnon modes it couples to. Distinct cavity modes
/// of the same physical box are distinct HybridSystem instances.
struct HybridSystem {
    CavityMode cavity;
    std::vector<MagnonMode> magnons;
};

/// Structural validation. Returns one human-readable description per violated
/// invariant; empty means valid. Side-effect-free and idempotent.
inline std::vector<std::string> validate_system(const HybridSystem& system) {
    std::vector<std::string> violations;
    const auto& c = system.cavity;
    auto flag = [&violations](const std::string& text) { violations.push_back(text); };

    if (!(c.omega_c > 0.0) || !std::isfinite(c.omega_c)) {
        flag("cavity.omega_c: must be strictly positive and finite");
    }
    if (!(c.kappa_in >= 0.0) || !std::isfinite(c.kappa_in)) {
        flag("cavity.kappa_in: must be non-negative and finite");
    }
    if (!(c.kappa_out >= 0.0) || !std::isfinite(c.kappa_out)) {
        flag("cavity.kappa_out: must be non-negative and finite");
    }
    if (!(c.kappa_int >= 0.0) || !std::isfinite(c.kappa_int)) {
        flag("cavity.kappa_int: must be non-negative and finite");
    }

    std::set<std::string> seen;
    for (const auto& m : system.magnons) {
        const std::string tag = "magnon '" + m.label + "'";
        if (!seen.insert(m.label).second) {
            flag(tag + ": label: duplicate magnon label, labels must be unique");
        }
        if (!(m.g_tilde >= 0.0) || !std::isfinite(m.g_tilde)) {
            flag(tag + ": g_tilde: must be non-negative and finite");
        }
        if (!(m.gamma_m > 0.0) || !std::isfinite(m.gamma_m)) {
            flag(tag + ": gamma_m: must be strictly positive and finite");
        }
        if (!(m.dispersion_slope > 0.0) || !std::isfinite(m.dispersion_slope)) {
            flag(tag + ": dispersion_slope: must be strictly positive and finite");
        }
        if (!std::isfinite(m.dispersion_offset)) {
            flag(tag + ": dispersion_offset: must be finite");
        }
    }
    return violations;
}

/// Throws invalid_system_error naming every violation; no-op when valid.
inline void require_valid(const HybridSystem& system) {
    const auto violations = validate_system(system);
    if (violations.empty()) return;
    std::string msg = "invalid system:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw invalid_system_error(msg);
}

/// Axes of a 2-D sweep: static field (T) by probe frequency (Hz), both
/// strictly increasing.
struct SweepGrid {
    std::vector<double> field_values; // tesla
    std::vector<double> freq_values;  // Hz

    void validate() const {
        auto check_axis = [](const std::vector<double>& v, const char* name) {
            if (v.empty()) throw std::invalid_argument(std::string("SweepGrid: ") + name + " must be non-empty");
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!std::isfinite(v[i])) {
                    throw std::invalid_argument(std::string("SweepGrid: ") + name + " contains non-finite value");
                }
                if (i > 0 && !(v[i] > v[i - 1])) {
                    throw std::invalid_argument(std::string("SweepGrid: ") + name + " must be strictly increasing");
                }
            }
        };
        check_axis(field_values, "field_values");
        check_axis(freq_values, "freq_values");
    }
};

/// Evenly spaced grid helper (n >= 1; n == 1 yields {lo}).
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) throw std::invalid_argument("linspace: need at least one point");
    std::vector<double> v(n);
    if (n == 1) {
        v[0] = lo;
        return v;
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * static_cast<double>(i);
    v.back() = hi;
    return v;
}

/// 2-D map of complex S21 over a SweepGrid, row-major with row = field index.
struct SpectrumMap {
    SweepGrid grid;
    std::vector<std::complex<double>> values; // size = n_fields * n_freqs
    std::map<std::string, std::string> metadata;

    [[nodiscard]] std::size_t n_fields() const { return grid.field_values.size(); }
    [[nodiscard]] std::size_t n_freqs() const { return grid.freq_values.size(); }

    [[nodiscard]] const std::complex<double>& at(std::size_t field_idx, std::size_t freq_idx) const {
        return values[field_idx * n_freqs() + freq_idx];
    }
    std::complex<double>& at(std::size_t field_idx, std::size_t freq_idx) {
        return values[field_idx * n_freqs() + freq_idx];
    }

    /// 20 log10 |S21| of one cell, dB.
    [[nodiscard]] double db(std::size_t field_idx, std::size_t freq_idx) const {
        return to_db(std::abs(at(field_idx, freq_idx)));
    }

    void validate() const {
        grid.validate();
        if (values.size() != n_fields() * n_freqs()) {
            throw std::invalid_argument("SpectrumMap: values size does not match grid dimensions");
        }
        for (const auto& v : values) {
            if (!std::isfinite(std::abs(v))) {
                throw std::invalid_argument("SpectrumMap: non-finite magnitude stored");
            }
        }
    }
};

} // namespace magnonics
