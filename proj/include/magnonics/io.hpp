// io.hpp — file formats: long-format spectrum CSV, branch-diagram CSV, the
// JSON run configuration, and the plain-text fit report.
//
// CSV schema (bit-exact headers):
//   field_T,freq_Hz,s21_db               magnitude-only map
//   field_T,freq_Hz,s21_db,s21_re,s21_im complex map
// Rows are sorted by field then frequency; axes are printed with 17
// significant digits so they reload exactly, dB with 9.
//
// Config keys carry their unit in the name (omega_c_ghz, kappa_in_mhz,
// field_min_t, ...); inside the library everything is Hz/T/W. JSON comments
// (// and /* */) are accepted so shipped configs can carry annotations.

#pragma once

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "magnonics/fitting.hpp"
#include "magnonics/model.hpp"
#include "magnonics/spectrum.hpp"

namespace magnonics {

class csv_error : public model_error {
  public:
    using model_error::model_error;
};

class config_error : public model_error {
  public:
    using model_error::model_error;
};

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline double parse_double(const std::string& token, const std::string& where) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw csv_error(where + ": cannot parse number from '" + token + "'");
    }
    return value;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Spectrum CSV
// ---------------------------------------------------------------------------

inline constexpr const char* spectrum_csv_header = "field_T,freq_Hz,s21_db";
inline constexpr const char* spectrum_csv_header_complex = "field_T,freq_Hz,s21_db,s21_re,s21_im";

/// Write a map in long format. By default the complex columns are emitted
/// only when some value carries a nonzero imaginary part; pass
/// complex_columns to force either schema.
inline void save_spectrum_csv(const SpectrumMap& map, const std::string& path,
                              std::optional<bool> complex_columns = std::nullopt) {
    bool write_complex;
    if (complex_columns) {
        write_complex = *complex_columns;
    } else {
        write_complex = false;
        for (const auto& v : map.values) {
            if (v.imag() != 0.0) {
                write_complex = true;
                break;
            }
        }
    }

    std::ofstream out(path);
    if (!out) throw csv_error("save_spectrum_csv: cannot open '" + path + "' for writing");
    out << (write_complex ? spectrum_csv_header_complex : spectrum_csv_header) << '\n';
    for (std::size_t i = 0; i < map.n_fields(); ++i) {
        for (std::size_t j = 0; j < map.n_freqs(); ++j) {
            out << detail::fmt("%.17g", map.grid.field_values[i]) << ','
                << detail::fmt("%.17g", map.grid.freq_values[j]) << ',' << detail::fmt("%.9g", map.db(i, j));
            if (write_complex) {
                out << ',' << detail::fmt("%.17g", map.at(i, j).real()) << ','
                    << detail::fmt("%.17g", map.at(i, j).imag());
            }
            out << '\n';
        }
    }
    if (!out) throw csv_error("save_spectrum_csv: write failed for '" + path + "'");
}

/// Read a long-format map back. The grid must be exactly rectangular: every
/// (field, freq) pair present once, axis values repeated bit-identically.
inline SpectrumMap load_spectrum_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw csv_error("load_spectrum_csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw csv_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool has_complex;
    if (line == spectrum_csv_header) {
        has_complex = false;
    } else if (line == spectrum_csv_header_complex) {
        has_complex = true;
    } else {
        throw csv_error(path + ":1: unrecognized header '" + line + "'");
    }

    struct Row {
        double field, freq, db, re, im;
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        const auto fields = detail::split_csv_line(line);
        const std::size_t expected = has_complex ? 5 : 3;
        if (fields.size() != expected) {
            throw csv_error(where + ": expected " + std::to_string(expected) + " columns, got " +
                            std::to_string(fields.size()));
        }
        Row r{};
        r.field = detail::parse_double(fields[0], where);
        r.freq = detail::parse_double(fields[1], where);
        r.db = detail::parse_double(fields[2], where);
        if (!std::isfinite(r.field) || !std::isfinite(r.freq) || !std::isfinite(r.db)) {
            throw csv_error(where + ": non-finite value");
        }
        if (has_complex) {
            r.re = detail::parse_double(fields[3], where);
            r.im = detail::parse_double(fields[4], where);
        } else {
            r.re = from_db(r.db);
            r.im = 0.0;
        }
        rows.push_back(r);
    }
    if (rows.empty()) throw csv_error(path + ": no data rows");

    std::vector<double> field_axis, freq_axis;
    for (const auto& r : rows) {
        field_axis.push_back(r.field);
        freq_axis.push_back(r.freq);
    }
    auto dedupe = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedupe(field_axis);
    dedupe(freq_axis);

    SpectrumMap map;
    map.grid.field_values = field_axis;
    map.grid.freq_values = freq_axis;
    map.values.assign(field_axis.size() * freq_axis.size(), {0.0, 0.0});
    std::vector<char> seen(map.values.size(), 0);

    auto axis_index = [](const std::vector<double>& axis, double v) {
        const auto it = std::lower_bound(axis.begin(), axis.end(), v);
        return static_cast<std::size_t>(it - axis.begin());
    };
    for (const auto& r : rows) {
        const std::size_t i = axis_index(field_axis, r.field);
        const std::size_t j = axis_index(freq_axis, r.freq);
        const std::size_t k = i * freq_axis.size() + j;
        if (seen[k]) {
            throw csv_error(path + ": duplicate cell (field_T=" + detail::fmt("%.17g", r.field) +
                            ", freq_Hz=" + detail::fmt("%.17g", r.freq) + ")");
        }
        seen[k] = 1;
        map.values[k] = {r.re, r.im};
    }
    if (rows.size() != map.values.size()) {
        std::string missing;
        int listed = 0;
        for (std::size_t i = 0; i < field_axis.size() && listed < 5; ++i) {
            for (std::size_t j = 0; j < freq_axis.size() && listed < 5; ++j) {
                if (!seen[i * freq_axis.size() + j]) {
                    missing += "\n  (field_T=" + detail::fmt("%.17g", field_axis[i]) +
                               ", freq_Hz=" + detail::fmt("%.17g", freq_axis[j]) + ")";
                    ++listed;
                }
            }
        }
        throw csv_error(path + ": non-rectangular grid, missing cells include:" + missing);
    }
    map.metadata["source"] = path;
    map.validate();
    return map;
}

/// Branch diagram as CSV: field_T,branch_index,freq_Hz,cavity_weight.
inline void save_branch_csv(const BranchDiagram& diagram, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw csv_error("save_branch_csv: cannot open '" + path + "' for writing");
    out << "field_T,branch_index,freq_Hz,cavity_weight\n";
    for (std::size_t i = 0; i < diagram.field_values.size(); ++i) {
        for (std::size_t k = 0; k < diagram.branches[i].size(); ++k) {
            out << detail::fmt("%.17g", diagram.field_values[i]) << ',' << k << ','
                << detail::fmt("%.17g", diagram.branches[i][k]) << ','
                << detail::fmt("%.9g", diagram.cavity_weight[i][k]) << '\n';
        }
    }
    if (!out) throw csv_error("save_branch_csv: write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct MaterialConfig {
    double relative_permittivity = 15.0; // user-supplied material parameter
    double k_ms = 2.0e5;                 // rad/m, representative MS-mode wavenumber
    double regime_ratio_threshold = 100.0;
    double low_excitation_threshold = 1e-3;
};

struct EnvironmentConfig {
    double temperature_k = 0.022;
    double input_power_dbm = -130.0;
};

struct DerivedInputs {
    double eta = 0.684; // overlap coefficient back-solved for the fundamental mode
    double mode_volume_m3 = 2.7e-6;
    double mean_magnon_number = 1e3;
};

struct OutputConfig {
    std::string directory = ".";
    bool complex_columns = false;
};

struct RunConfig {
    HybridSystem system;
    SweepGrid grid;
    PhysicalConstants constants;
    FitConfig fit;
    MaterialConfig material;
    EnvironmentConfig environment;
    DerivedInputs derived;
    OutputConfig output;
    std::vector<double> multipliers{1.0, 10.0, 100.0};
};

namespace detail {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline const json& require_key(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object()) throw config_error(path + ": expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw config_error(path + "." + key + ": missing required key");
    return *it;
}

inline double get_number(const json& obj, const std::string& path, const std::string& key) {
    const auto& v = require_key(obj, path, key);
    if (!v.is_number()) throw config_error(path + "." + key + ": expected a number");
    return v.get<double>();
}

inline double get_number_or(const json& obj, const std::string& path, const std::string& key, double fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw config_error(path + "." + key + ": expected a number");
    return v.get<double>();
}

inline std::string get_string_or(const json& obj, const std::string& path, const std::string& key,
                                 const std::string& fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw config_error(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

inline bool get_bool_or(const json& obj, const std::string& path, const std::string& key, bool fallback) {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) throw config_error(path + "." + key + ": expected a boolean");
    return v.get<bool>();
}

/// Config parameter name (unit-suffixed) -> (canonical name, scale to SI-ish
/// internal units). Returns nullopt for unknown names.
inline std::optional<std::pair<std::string, double>> canonical_param_name(const std::string& config_name) {
    if (config_name == "omega_c_ghz") return {{"omega_c", 1e9}};
    if (config_name == "kappa_in_mhz") return {{"kappa_in", 1e6}};
    if (config_name == "kappa_out_mhz") return {{"kappa_out", 1e6}};
    if (config_name == "kappa_int_mhz") return {{"kappa_int", 1e6}};
    if (config_name == "db_offset_db") return {{"db_offset", 1.0}};
    const auto dot = config_name.find('.');
    if (dot == std::string::npos) return std::nullopt;
    const std::string label = config_name.substr(0, dot);
    const std::string field = config_name.substr(dot + 1);
    if (label.empty()) return std::nullopt;
    if (field == "g_tilde_mhz") return {{label + ".g_tilde", 1e6}};
    if (field == "gamma_mhz") return {{label + ".gamma_m", 1e6}};
    if (field == "dispersion_slope_ghz_per_t") return {{label + ".dispersion_slope", 1e9}};
    if (field == "dispersion_offset_t") return {{label + ".dispersion_offset", 1.0}};
    return std::nullopt;
}

/// Inverse of canonical_param_name.
inline std::pair<std::string, double> config_param_name(const std::string& canonical) {
    if (canonical == "omega_c") return {"omega_c_ghz", 1e9};
    if (canonical == "kappa_in") return {"kappa_in_mhz", 1e6};
    if (canonical == "kappa_out") return {"kappa_out_mhz", 1e6};
    if (canonical == "kappa_int") return {"kappa_int_mhz", 1e6};
    if (canonical == "db_offset") return {"db_offset_db", 1.0};
    const auto dot = canonical.find('.');
    const std::string label = canonical.substr(0, dot);
    const std::string field = canonical.substr(dot + 1);
    if (field == "g_tilde") return {label + ".g_tilde_mhz", 1e6};
    if (field == "gamma_m") return {label + ".gamma_mhz", 1e6};
    if (field == "dispersion_slope") return {label + ".dispersion_slope_ghz_per_t", 1e9};
    return {label + ".dispersion_offset_t", 1.0};
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& root, const std::string& name) {
    using detail::get_bool_or;
    using detail::get_number;
    using detail::get_number_or;
    using detail::get_string_or;
    using detail::require_key;

    RunConfig cfg;

    const auto& system = require_key(root, name, "system");
    const auto& cavity = require_key(system, name + ".system", "cavity");
    const std::string cav_path = name + ".system.cavity";
    cfg.system.cavity.label = get_string_or(cavity, cav_path, "label", "cavity");
    cfg.system.cavity.omega_c = get_number(cavity, cav_path, "omega_c_ghz") * 1e9;
    cfg.system.cavity.kappa_in = get_number(cavity, cav_path, "kappa_in_mhz") * 1e6;
    cfg.system.cavity.kappa_out = get_number(cavity, cav_path, "kappa_out_mhz") * 1e6;
    cfg.system.cavity.kappa_int = get_number(cavity, cav_path, "kappa_int_mhz") * 1e6;

    if (system.contains("magnons")) {
        const auto& magnons = system.at("magnons");
        if (!magnons.is_array()) throw config_error(name + ".system.magnons: expected an array");
        for (std::size_t k = 0; k < magnons.size(); ++k) {
            const std::string mpath = name + ".system.magnons[" + std::to_string(k) + "]";
            const auto& m = magnons.at(k);
            MagnonMode mode;
            mode.label = get_string_or(m, mpath, "label", "m" + std::to_string(k));
            if (mode.label.find('.') != std::string::npos) {
                throw config_error(mpath + ".label: magnon labels must not contain '.'");
            }
            mode.g_tilde = get_number(m, mpath, "g_tilde_mhz") * 1e6;
            mode.gamma_m = get_number(m, mpath, "gamma_mhz") * 1e6;
            mode.dispersion_slope = get_number_or(m, mpath, "dispersion_slope_ghz_per_t", 28.0) * 1e9;
            mode.dispersion_offset = get_number_or(m, mpath, "dispersion_offset_t", 0.0);
            if (m.contains("total_spin")) mode.total_spin = get_number(m, mpath, "total_spin");
            cfg.system.magnons.push_back(std::move(mode));
        }
    }

    if (root.contains("grid")) {
        const auto& grid = root.at("grid");
        const std::string gpath = name + ".grid";
        const double bmin = get_number(grid, gpath, "field_min_t");
        const double bmax = get_number(grid, gpath, "field_max_t");
        const auto bpts = static_cast<std::size_t>(get_number(grid, gpath, "field_points"));
        const double fmin = get_number(grid, gpath, "freq_min_ghz") * 1e9;
        const double fmax = get_number(grid, gpath, "freq_max_ghz") * 1e9;
        const auto fpts = static_cast<std::size_t>(get_number(grid, gpath, "freq_points"));
        if (bpts < 1 || fpts < 1) throw config_error(gpath + ": point counts must be >= 1");
        if (bpts > 1 && !(bmax > bmin)) throw config_error(gpath + ": field_max_t must exceed field_min_t");
        if (fpts > 1 && !(fmax > fmin)) throw config_error(gpath + ": freq_max_ghz must exceed freq_min_ghz");
        cfg.grid.field_values = linspace(bmin, bmax, bpts);
        cfg.grid.freq_values = linspace(fmin, fmax, fpts);
    }

    if (root.contains("constants")) {
        const auto& c = root.at("constants");
        const std::string cpath = name + ".constants";
        cfg.constants.gamma_e = get_number_or(c, cpath, "gamma_e_ghz_per_t", cfg.constants.gamma_e / 1e9) * 1e9;
        cfg.constants.spin_per_ion = get_number_or(c, cpath, "spin_per_ion", cfg.constants.spin_per_ion);
        cfg.constants.lambda_ex = get_number_or(c, cpath, "lambda_ex_m2", cfg.constants.lambda_ex);
        cfg.constants.h_bar = get_number_or(c, cpath, "h_bar_js", cfg.constants.h_bar);
        cfg.constants.k_B = get_number_or(c, cpath, "k_b_j_per_k", cfg.constants.k_B);
        cfg.constants.mu_0 = get_number_or(c, cpath, "mu_0_tm_per_a", cfg.constants.mu_0);
        cfg.constants.mu_B = get_number_or(c, cpath, "mu_b_j_per_t", cfg.constants.mu_B);
        cfg.constants.epsilon_0 = get_number_or(c, cpath, "epsilon_0_f_per_m", cfg.constants.epsilon_0);
        cfg.constants.validate();
    }

    if (root.contains("fit")) {
        const auto& f = root.at("fit");
        const std::string fpath = name + ".fit";
        if (f.contains("free_parameters")) {
            const auto& fp = f.at("free_parameters");
            if (!fp.is_array()) throw config_error(fpath + ".free_parameters: expected an array");
            for (const auto& entry : fp) {
                if (!entry.is_string()) throw config_error(fpath + ".free_parameters: expected strings");
                const auto mapped = detail::canonical_param_name(entry.get<std::string>());
                if (!mapped) {
                    throw config_error(fpath + ".free_parameters: unknown parameter '" +
                                       entry.get<std::string>() + "'");
                }
                cfg.fit.free_parameters.push_back(mapped->first);
            }
        }
        if (f.contains("bounds")) {
            const auto& bounds = f.at("bounds");
            if (!bounds.is_object()) throw config_error(fpath + ".bounds: expected an object");
            for (const auto& [key, value] : bounds.items()) {
                const auto mapped = detail::canonical_param_name(key);
                if (!mapped) throw config_error(fpath + ".bounds: unknown parameter '" + key + "'");
                if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
                    throw config_error(fpath + ".bounds." + key + ": expected [lower, upper]");
                }
                cfg.fit.bounds[mapped->first] = {value[0].get<double>() * mapped->second,
                                                 value[1].get<double>() * mapped->second};
            }
        }
        cfg.fit.max_iterations = static_cast<int>(get_number_or(f, fpath, "max_iterations", 200));
        cfg.fit.tolerance = get_number_or(f, fpath, "tolerance", 1e-10);
        cfg.fit.seed = static_cast<std::uint64_t>(get_number_or(f, fpath, "seed", 0));
        cfg.fit.kappa_ratio = get_number_or(f, fpath, "kappa_ratio", 1.0);
        cfg.fit.db_offset = get_number_or(f, fpath, "db_offset_db", 0.0);
    }

    if (root.contains("material")) {
        const auto& m = root.at("material");
        const std::string mpath = name + ".material";
        cfg.material.relative_permittivity =
            get_number_or(m, mpath, "relative_permittivity", cfg.material.relative_permittivity);
        cfg.material.k_ms = get_number_or(m, mpath, "k_ms_rad_per_m", cfg.material.k_ms);
        cfg.material.regime_ratio_threshold =
            get_number_or(m, mpath, "regime_ratio_threshold", cfg.material.regime_ratio_threshold);
        cfg.material.low_excitation_threshold =
            get_number_or(m, mpath, "low_excitation_threshold", cfg.material.low_excitation_threshold);
    }

    if (root.contains("environment")) {
        const auto& e = root.at("environment");
        const std::string epath = name + ".environment";
        cfg.environment.temperature_k = get_number_or(e, epath, "temperature_k", cfg.environment.temperature_k);
        cfg.environment.input_power_dbm =
            get_number_or(e, epath, "input_power_dbm", cfg.environment.input_power_dbm);
    }

    if (root.contains("derived")) {
        const auto& d = root.at("derived");
        const std::string dpath = name + ".derived";
        cfg.derived.eta = get_number_or(d, dpath, "eta", cfg.derived.eta);
        cfg.derived.mode_volume_m3 = get_number_or(d, dpath, "mode_volume_m3", cfg.derived.mode_volume_m3);
        cfg.derived.mean_magnon_number =
            get_number_or(d, dpath, "mean_magnon_number", cfg.derived.mean_magnon_number);
    }

    if (root.contains("output")) {
        const auto& o = root.at("output");
        const std::string opath = name + ".output";
        cfg.output.directory = get_string_or(o, opath, "directory", cfg.output.directory);
        cfg.output.complex_columns = get_bool_or(o, opath, "complex_columns", cfg.output.complex_columns);
    }

    if (root.contains("multipliers")) {
        const auto& mults = root.at("multipliers");
        if (!mults.is_array()) throw config_error(name + ".multipliers: expected an array");
        cfg.multipliers.clear();
        for (const auto& v : mults) {
            if (!v.is_number()) throw config_error(name + ".multipliers: expected numbers");
            cfg.multipliers.push_back(v.get<double>());
        }
    }

    const auto violations = validate_system(cfg.system);
    if (!violations.empty()) {
        std::string msg = name + ".system: invalid parameters:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw config_error(msg);
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& err) {
        throw config_error(path + ": " + err.what());
    }
    return parse_run_config(root, path);
}

/// Canonical JSON echo of a parsed config; re-parses to an equivalent RunConfig.
inline std::string dump_run_config(const RunConfig& cfg) {
    using detail::ordered_json;
    ordered_json root;

    ordered_json cavity;
    cavity["label"] = cfg.system.cavity.label;
    cavity["omega_c_ghz"] = cfg.system.cavity.omega_c / 1e9;
    cavity["kappa_in_mhz"] = cfg.system.cavity.kappa_in / 1e6;
    cavity["kappa_out_mhz"] = cfg.system.cavity.kappa_out / 1e6;
    cavity["kappa_int_mhz"] = cfg.system.cavity.kappa_int / 1e6;
    root["system"]["cavity"] = cavity;
    root["system"]["magnons"] = ordered_json::array();
    for (const auto& m : cfg.system.magnons) {
        ordered_json jm;
        jm["label"] = m.label;
        jm["g_tilde_mhz"] = m.g_tilde / 1e6;
        jm["gamma_mhz"] = m.gamma_m / 1e6;
        jm["dispersion_slope_ghz_per_t"] = m.dispersion_slope / 1e9;
        jm["dispersion_offset_t"] = m.dispersion_offset;
        if (m.total_spin) jm["total_spin"] = *m.total_spin;
        root["system"]["magnons"].push_back(jm);
    }

    if (!cfg.grid.field_values.empty()) {
        ordered_json grid;
        grid["field_min_t"] = cfg.grid.field_values.front();
        grid["field_max_t"] = cfg.grid.field_values.back();
        grid["field_points"] = cfg.grid.field_values.size();
        grid["freq_min_ghz"] = cfg.grid.freq_values.front() / 1e9;
        grid["freq_max_ghz"] = cfg.grid.freq_values.back() / 1e9;
        grid["freq_points"] = cfg.grid.freq_values.size();
        root["grid"] = grid;
    }

    ordered_json constants;
    constants["gamma_e_ghz_per_t"] = cfg.constants.gamma_e / 1e9;
    constants["spin_per_ion"] = cfg.constants.spin_per_ion;
    constants["lambda_ex_m2"] = cfg.constants.lambda_ex;
    root["constants"] = constants;

    ordered_json fit;
    fit["free_parameters"] = ordered_json::array();
    for (const auto& p : cfg.fit.free_parameters) {
        fit["free_parameters"].push_back(detail::config_param_name(p).first);
    }
    fit["bounds"] = ordered_json::object();
    for (const auto& [canonical, range] : cfg.fit.bounds) {
        const auto [cname, scale] = detail::config_param_name(canonical);
        fit["bounds"][cname] = {range.first / scale, range.second / scale};
    }
    fit["max_iterations"] = cfg.fit.max_iterations;
    fit["tolerance"] = cfg.fit.tolerance;
    fit["seed"] = cfg.fit.seed;
    fit["kappa_ratio"] = cfg.fit.kappa_ratio;
    fit["db_offset_db"] = cfg.fit.db_offset;
    root["fit"] = fit;

    ordered_json material;
    material["relative_permittivity"] = cfg.material.relative_permittivity;
    material["k_ms_rad_per_m"] = cfg.material.k_ms;
    material["regime_ratio_threshold"] = cfg.material.regime_ratio_threshold;
    material["low_excitation_threshold"] = cfg.material.low_excitation_threshold;
    root["material"] = material;

    ordered_json environment;
    environment["temperature_k"] = cfg.environment.temperature_k;
    environment["input_power_dbm"] = cfg.environment.input_power_dbm;
    root["environment"] = environment;

    ordered_json derived;
    derived["eta"] = cfg.derived.eta;
    derived["mode_volume_m3"] = cfg.derived.mode_volume_m3;
    derived["mean_magnon_number"] = cfg.derived.mean_magnon_number;
    root["derived"] = derived;

    ordered_json output;
    output["directory"] = cfg.output.directory;
    output["complex_columns"] = cfg.output.complex_columns;
    root["output"] = output;

    root["multipliers"] = cfg.multipliers;

    return root.dump(2) + "\n";
}

/// Fit report as machine-parseable key=value lines.
inline std::string format_fit_report(const FitReport& report) {
    std::ostringstream out;
    out << "converged=" << (report.converged ? "true" : "false") << '\n';
    out << "iterations=" << report.iterations << '\n';
    out << "residual_rms_db=" << detail::fmt("%.9g", report.residual_rms) << '\n';
    const auto& c = report.fitted.cavity;
    out << "omega_c_hz=" << detail::fmt("%.17g", c.omega_c) << '\n';
    out << "kappa_in_hz=" << detail::fmt("%.17g", c.kappa_in) << '\n';
    out << "kappa_out_hz=" << detail::fmt("%.17g", c.kappa_out) << '\n';
    out << "kappa_int_hz=" << detail::fmt("%.17g", c.kappa_int) << '\n';
    out << "kappa_tot_hz=" << detail::fmt("%.17g", c.kappa_tot()) << '\n';
    out << "db_offset_db=" << detail::fmt("%.17g", report.db_offset) << '\n';
    for (const auto& m : report.fitted.magnons) {
        const std::string p = "magnon." + m.label + ".";
        out << p << "g_tilde_hz=" << detail::fmt("%.17g", m.g_tilde) << '\n';
        out << p << "gamma_hz=" << detail::fmt("%.17g", m.gamma_m) << '\n';
        out << p << "dispersion_slope_hz_per_t=" << detail::fmt("%.17g", m.dispersion_slope) << '\n';
        out << p << "dispersion_offset_t=" << detail::fmt("%.17g", m.dispersion_offset) << '\n';
    }
    for (const auto& [name, sigma] : report.uncertainties) {
        out << "stderr." << name << "=" << detail::fmt("%.9g", sigma) << '\n';
    }
    return out.str();
}

} // namespace magnonics
