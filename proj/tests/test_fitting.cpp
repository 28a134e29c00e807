#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace magnonics;

namespace {

FrequencyTrace bare_trace(const CavityMode& cavity, std::size_t n = 401, double halfwidth = 10e6) {
    HybridSystem s;
    s.cavity = cavity;
    SweepGrid grid;
    grid.field_values = {0.3};
    grid.freq_values = linspace(cavity.omega_c - halfwidth, cavity.omega_c + halfwidth, n);
    return slice_at_field(spectrum_map(s, grid), 0);
}

FitConfig te102_fit_config() {
    FitConfig cfg;
    cfg.free_parameters = {"omega_c",         "kappa_int",       "db_offset",
                           "FMR.g_tilde",     "FMR.gamma_m",     "FMR.dispersion_slope",
                           "FMR.dispersion_offset", "MS.g_tilde", "MS.gamma_m",
                           "MS.dispersion_slope",   "MS.dispersion_offset"};
    cfg.bounds = {
        {"omega_c", {10.2e9, 10.4e9}},
        {"kappa_int", {0.0, 20e6}},
        {"db_offset", {-30.0, 30.0}},
        {"FMR.g_tilde", {0.1e6, 40e6}},
        {"FMR.gamma_m", {0.05e6, 60e6}},
        {"FMR.dispersion_slope", {20e9, 36e9}},
        {"FMR.dispersion_offset", {-0.05, 0.05}},
        {"MS.g_tilde", {0.1e6, 40e6}},
        {"MS.gamma_m", {0.05e6, 60e6}},
        {"MS.dispersion_slope", {20e9, 36e9}},
        {"MS.dispersion_offset", {-0.05, 0.05}},
    };
    return cfg;
}

} // namespace

TEST_CASE("bare-cavity fit recovers the cryogenic fundamental mode exactly") {
    const CavityMode truth{"TE101", 8.855e9, 0.19e6, 0.20e6, 0.71e6};
    const auto fit = fit_bare_cavity(bare_trace(truth), 0.19 / 0.20);
    CHECK(std::abs(fit.cavity.omega_c - truth.omega_c) <= 1e-6 * truth.omega_c);
    CHECK(std::abs(fit.cavity.kappa_tot() - 1.1e6) <= 1e-6 * 1.1e6);
    CHECK(fit.ratio_resolved);
    CHECK(fit.cavity.kappa_in == Catch::Approx(0.19e6).epsilon(1e-6));
    CHECK(fit.cavity.kappa_out == Catch::Approx(0.20e6).epsilon(1e-6));
    CHECK(fit.cavity.kappa_int == Catch::Approx(0.71e6).epsilon(1e-5));
    CHECK(fit.residual_rms < 1e-8);
}

TEST_CASE("bare-cavity fit without a port ratio reports the product only") {
    const CavityMode truth{"TE102", 10.306e9, 0.85e6, 0.99e6, 0.56e6};
    const auto fit = fit_bare_cavity(bare_trace(truth));
    CHECK_FALSE(fit.ratio_resolved);
    CHECK(fit.kappa_in_out_product == Catch::Approx(0.85e6 * 0.99e6).epsilon(1e-6));
    CHECK(fit.cavity.kappa_tot() == Catch::Approx(2.4e6).epsilon(1e-6));
    // symmetric placeholder split preserves the product
    CHECK(fit.cavity.kappa_in == fit.cavity.kappa_out);
}

TEST_CASE("bare-cavity fit tolerates 0.1 dB noise within 2 percent") {
    const CavityMode truth{"TE101", 8.855e9, 0.19e6, 0.20e6, 0.71e6};
    HybridSystem s;
    s.cavity = truth;
    SweepGrid grid;
    grid.field_values = {0.3};
    grid.freq_values = linspace(truth.omega_c - 10e6, truth.omega_c + 10e6, 201);
    int failures = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto map = spectrum_map(s, grid);
        testsup::add_db_noise(map, 0.1, seed);
        const auto fit = fit_bare_cavity(slice_at_field(map, 0), 0.19 / 0.20);
        if (std::abs(fit.cavity.omega_c - truth.omega_c) > 0.02 * truth.omega_c) ++failures;
        if (std::abs(fit.cavity.kappa_tot() - 1.1e6) > 0.02 * 1.1e6) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("flat and boundary-peaked traces raise no-resonance errors") {
    FrequencyTrace flat;
    flat.freq_values = linspace(8.8e9, 8.9e9, 51);
    flat.magnitude_db.assign(51, -9.01);
    REQUIRE_THROWS_AS(fit_bare_cavity(flat), no_resonance_error);

    FrequencyTrace edge;
    edge.freq_values = linspace(8.8e9, 8.9e9, 51);
    edge.magnitude_db.resize(51);
    for (int i = 0; i < 51; ++i) edge.magnitude_db[i] = -40.0 + i; // monotone: max at the boundary
    REQUIRE_THROWS_AS(fit_bare_cavity(edge), no_resonance_error);

    FrequencyTrace tiny;
    tiny.freq_values = {1.0, 2.0, 3.0};
    tiny.magnitude_db = {0.0, 1.0, 0.0};
    REQUIRE_THROWS_AS(fit_bare_cavity(tiny), std::invalid_argument);
}

TEST_CASE("initial guess lands within 30 percent on the second-mode cryogenic map") {
    const auto truth = testsup::te102_cryo();
    const auto map = spectrum_map(truth, testsup::grid_for(truth));
    const auto guess = initial_guess(map, 2);
    REQUIRE(guess.system.magnons.size() == 2);

    auto within = [](double got, double want, double tol) { return std::abs(got - want) <= tol * std::abs(want); };
    CHECK(within(guess.system.cavity.omega_c, truth.cavity.omega_c, 0.30));
    CHECK(within(guess.system.cavity.kappa_tot(), truth.cavity.kappa_tot(), 0.30));
    for (std::size_t k = 0; k < 2; ++k) {
        INFO("magnon " << k);
        CHECK(within(guess.system.magnons[k].g_tilde, truth.magnons[k].g_tilde, 0.30));
        CHECK(within(guess.system.magnons[k].gamma_m, truth.magnons[k].gamma_m, 0.30));
        CHECK(within(guess.system.magnons[k].dispersion_slope, truth.magnons[k].dispersion_slope, 0.30));
        CHECK(within(guess.system.magnons[k].dispersion_offset, truth.magnons[k].dispersion_offset, 0.30));
    }
}

TEST_CASE("initial guess on an uncoupled map detects no magnon modes") {
    auto s = testsup::te101_cryo();
    for (auto& m : s.magnons) m.g_tilde = 0.0;
    const auto map = spectrum_map(s, testsup::grid_for(s));
    const auto guess = initial_guess(map);
    CHECK(guess.system.magnons.empty());
    REQUIRE_FALSE(guess.warnings.empty());
}

TEST_CASE("initial guess flags a missing mode on a windowed map") {
    const auto truth = testsup::te102_cryo();
    auto grid = testsup::grid_for(truth);
    // stop the field sweep before the second (MS) crossing
    const double b_ms = truth.cavity.omega_c / 28.0e9 + truth.magnons[1].dispersion_offset;
    grid.field_values = linspace(grid.field_values.front(), b_ms - 0.0025, 151);
    const auto map = spectrum_map(truth, grid);
    const auto guess = initial_guess(map, 2);
    CHECK(guess.system.magnons.size() == 1);
    bool flagged = false;
    for (const auto& w : guess.warnings) {
        if (w.find("under-determined") != std::string::npos) flagged = true;
    }
    CHECK(flagged);
}

TEST_CASE("fit from the exact truth is an immediate fixed point") {
    const auto truth = testsup::te101_cryo();
    const auto map = spectrum_map(truth, testsup::grid_for(truth, 101, 101));
    auto cfg = te102_fit_config();
    cfg.bounds["omega_c"] = {8.8e9, 8.9e9};
    const auto report = fit_hybrid(map, cfg, truth);
    CHECK(report.converged);
    CHECK(report.iterations <= 2);
    CHECK(report.residual_rms < 1e-8);
}

TEST_CASE("noisy second-mode map round-trips within 5 percent") {
    const auto truth = testsup::te102_cryo();
    auto map = spectrum_map(truth, testsup::grid_for(truth));
    testsup::add_db_noise(map, 0.2, 42);
    const auto seeded = initial_guess(map, 2);
    REQUIRE(seeded.system.magnons.size() == 2);
    const auto report = fit_hybrid(map, te102_fit_config(), seeded.system);
    REQUIRE(report.converged);

    auto rel = [](double got, double want) { return std::abs(got - want) / std::abs(want); };
    CHECK(rel(report.fitted.magnons[0].g_tilde, 7.5e6) < 0.05);
    CHECK(rel(report.fitted.magnons[1].g_tilde, 8.3e6) < 0.05);
    CHECK(rel(report.fitted.magnons[0].gamma_m, 1.3e6) < 0.05);
    CHECK(rel(report.fitted.magnons[1].gamma_m, 3.3e6) < 0.05);
    CHECK_FALSE(report.uncertainties.empty());
}

TEST_CASE("overdamped magnetostatic mode fits as weakly coupled with uncertainty spanning zero") {
    auto truth = testsup::te102_cryo();
    truth.magnons[1].gamma_m *= 100.0; // 330 MHz: line much broader than the field window resolves cleanly
    auto map = spectrum_map(truth, testsup::grid_for(truth));
    testsup::add_db_noise(map, 0.2, 7);

    // seed as an experimenter would: the MS crossing is invisible, so its
    // block starts from an uninformed guess and floats entirely
    HybridSystem guess = truth;
    guess.magnons[1].g_tilde *= 1.3;
    guess.magnons[1].gamma_m *= 0.7;
    FitConfig cfg;
    cfg.free_parameters = {"kappa_int", "db_offset", "MS.g_tilde", "MS.gamma_m", "MS.dispersion_offset"};
    cfg.bounds = {{"kappa_int", {0.0, 20e6}},
                  {"db_offset", {-30.0, 30.0}},
                  {"MS.g_tilde", {0.01e6, 40e6}},
                  {"MS.gamma_m", {0.05e6, 2000e6}},
                  {"MS.dispersion_offset", {-0.05, 0.05}}};
    const auto report = fit_hybrid(map, cfg, guess);
    REQUIRE(report.converged);

    const double g_ms = report.fitted.magnons[1].g_tilde;
    const double c_ms = cooperativity(g_ms, report.fitted.cavity.kappa_tot(), report.fitted.magnons[1].gamma_m);
    CHECK(c_ms < 1.0);
    // the coupling is consistent with zero: its 2-sigma band reaches it
    CHECK(report.uncertainties.at("MS.g_tilde") >= 0.5 * g_ms);
}

TEST_CASE("structurally degenerate parameter sets are reported with the null direction") {
    const auto truth = testsup::te101_cryo();
    const auto map = spectrum_map(truth, testsup::grid_for(truth, 61, 61));
    HybridSystem guess = truth;
    guess.cavity.kappa_in *= 1.05;
    FitConfig cfg;
    cfg.free_parameters = {"kappa_in", "kappa_out", "db_offset"};
    cfg.bounds = {{"kappa_in", {0.01e6, 2e6}}, {"kappa_out", {0.01e6, 2e6}}, {"db_offset", {-10.0, 10.0}}};
    REQUIRE_THROWS_AS(fit_hybrid(map, cfg, guess), degenerate_parameter_error);
}

TEST_CASE("residual norm identities") {
    const auto truth = testsup::te101_cryo();
    const auto map = spectrum_map(truth, testsup::grid_for(truth, 41, 41));
    CHECK(residual_norm(map, truth, 0.0) == 0.0);
    CHECK(residual_norm(map, truth, 3.0) == Catch::Approx(3.0).epsilon(1e-12));
    CHECK(residual_norm(map, truth, -3.0) == Catch::Approx(3.0).epsilon(1e-12));

    // direct arithmetic oracle on a mismatched system
    auto other = truth;
    other.cavity.kappa_int *= 2.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < map.n_fields(); ++i)
        for (std::size_t j = 0; j < map.n_freqs(); ++j) {
            const double r = s21(other, map.grid.freq_values[j], map.grid.field_values[i]).magnitude_db - map.db(i, j);
            ss += r * r;
        }
    CHECK(residual_norm(map, other, 0.0) ==
          Catch::Approx(std::sqrt(ss / static_cast<double>(map.values.size()))).epsilon(1e-14));
}

TEST_CASE("fits are deterministic: identical inputs give bit-identical reports") {
    const auto truth = testsup::te102_cryo();
    auto map = spectrum_map(truth, testsup::grid_for(truth, 81, 81));
    testsup::add_db_noise(map, 0.2, 5);
    const auto seeded = initial_guess(map, 2);
    const auto cfg = te102_fit_config();
    const auto a = fit_hybrid(map, cfg, seeded.system);
    const auto b = fit_hybrid(map, cfg, seeded.system);

    CHECK(a.residual_rms == b.residual_rms);
    CHECK(a.iterations == b.iterations);
    CHECK(a.db_offset == b.db_offset);
    CHECK(a.fitted.cavity.omega_c == b.fitted.cavity.omega_c);
    CHECK(a.fitted.cavity.kappa_int == b.fitted.cavity.kappa_int);
    for (std::size_t k = 0; k < a.fitted.magnons.size(); ++k) {
        CHECK(a.fitted.magnons[k].g_tilde == b.fitted.magnons[k].g_tilde);
        CHECK(a.fitted.magnons[k].gamma_m == b.fitted.magnons[k].gamma_m);
        CHECK(a.fitted.magnons[k].dispersion_slope == b.fitted.magnons[k].dispersion_slope);
        CHECK(a.fitted.magnons[k].dispersion_offset == b.fitted.magnons[k].dispersion_offset);
    }
    CHECK(a.uncertainties == b.uncertainties);
}

TEST_CASE("fitted dimensionless ratios are invariant under a global frequency rescale") {
    const double s = 2.0;
    auto run = [&](double scale) {
        auto truth = testsup::te102_cryo();
        truth.cavity.omega_c *= scale;
        truth.cavity.kappa_in *= scale;
        truth.cavity.kappa_out *= scale;
        truth.cavity.kappa_int *= scale;
        for (auto& m : truth.magnons) {
            m.g_tilde *= scale;
            m.gamma_m *= scale;
            m.dispersion_slope *= scale;
        }
        auto grid = testsup::grid_for(truth, 101, 101);
        auto map = spectrum_map(truth, grid);

        HybridSystem guess = truth;
        guess.magnons[0].g_tilde *= 1.07;
        guess.magnons[1].gamma_m *= 0.93;
        guess.cavity.kappa_int *= 1.04;
        FitConfig cfg;
        cfg.free_parameters = {"kappa_int", "FMR.g_tilde", "MS.gamma_m"};
        cfg.bounds = {{"kappa_int", {0.0, 20e6 * scale}},
                      {"FMR.g_tilde", {0.1e6 * scale, 40e6 * scale}},
                      {"MS.gamma_m", {0.05e6 * scale, 60e6 * scale}}};
        return fit_hybrid(map, cfg, guess);
    };
    const auto base = run(1.0);
    const auto scaled = run(s);
    REQUIRE(base.converged);
    REQUIRE(scaled.converged);

    auto ratios = [](const FitReport& r) {
        const double ktot = r.fitted.cavity.kappa_tot();
        return std::vector<double>{
            cooperativity(r.fitted.magnons[0].g_tilde, ktot, r.fitted.magnons[0].gamma_m),
            r.fitted.magnons[0].g_tilde / ktot,
            r.fitted.magnons[1].g_tilde / r.fitted.magnons[1].gamma_m,
        };
    };
    const auto a = ratios(base), b = ratios(scaled);
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(std::abs(a[k] - b[k]) <= 1e-9 * std::abs(a[k]));
    }
}

TEST_CASE("fit configuration validation") {
    const auto truth = testsup::te101_cryo();
    const auto map = spectrum_map(truth, testsup::grid_for(truth, 21, 21));
    FitConfig cfg;
    cfg.free_parameters = {"nonsense"};
    cfg.bounds = {{"nonsense", {0.0, 1.0}}};
    REQUIRE_THROWS_WITH(fit_hybrid(map, cfg, truth), Catch::Matchers::ContainsSubstring("nonsense"));

    cfg.free_parameters = {"omega_c"};
    cfg.bounds = {};
    REQUIRE_THROWS_WITH(fit_hybrid(map, cfg, truth), Catch::Matchers::ContainsSubstring("bounds"));

    cfg.bounds = {{"omega_c", {8.9e9, 8.8e9}}};
    REQUIRE_THROWS_AS(fit_hybrid(map, cfg, truth), std::invalid_argument);
}
