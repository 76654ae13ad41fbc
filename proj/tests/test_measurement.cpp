#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "gfmp/config.hpp"
#include "gfmp/measurement.hpp"
#include "oracle_helpers.hpp"

using namespace gfmp;
using Catch::Approx;

TEST_CASE("compare_responses basics") {
    const auto grid = log_grid(10.0, 1e3, 20);
    const auto elem = TransferElement::rational({1.0, 0.1}, {1.0, 0.001});
    const auto a = frequency_response(elem, grid);

    SECTION("identical responses") {
        const auto cmp = compare_responses(a, a);
        CHECK(cmp.max_mag_err_pct == Approx(0.0).margin(1e-12));
        CHECK(cmp.max_phase_err_deg == Approx(0.0).margin(1e-12));
        CHECK(cmp.worst_f_hz == Approx(grid.hz(0)));
    }
    SECTION("pure scaling") {
        FrequencyResponse b = a;
        for (auto& v : b.values) v *= 1.10;
        const auto cmp = compare_responses(a, b);
        CHECK(cmp.max_mag_err_pct == Approx(10.0).margin(1e-9));
        CHECK(cmp.max_phase_err_deg == Approx(0.0).margin(1e-9));
    }
    SECTION("grid mismatch") {
        const auto other = frequency_response(elem, log_grid(10.0, 1e3, 21));
        CHECK_THROWS_AS(compare_responses(a, other), GridMismatch);
    }
}

TEST_CASE("ideal versus delay-aware magnitude agreement window") {
    const auto cfg = default_config();
    const auto yv = yv_conv(cfg.va_conventional);
    const auto grid = log_grid(50.0, 240.0, 100);
    const auto a = frequency_response(z_eq_ideal(yv, cfg.controller.without_delay(), cfg.plant), grid);
    const auto b = frequency_response(z_eq_delay(yv, cfg.controller, cfg.plant), grid);
    const auto cmp = compare_responses(a, b);
    CHECK(cmp.max_mag_err_pct <= 10.0);
}

TEST_CASE("frequency scan validation") {
    const auto cfg = default_config();
    SimConfig sim = cfg.sim_config();
    sim.va_schedule = {{0.0, VaMode::proposed}};
    const auto zeq = z_eq_delay(yv_prop(cfg.va_proposed), cfg.controller, cfg.plant);

    SECTION("fundamental guard band") {
        ScanConfig sc;
        sc.frequencies_hz = {100.0, 60.0};
        CHECK_THROWS_AS(frequency_scan(sc, sim, zeq), InvalidRange);
        sc.frequencies_hz = {100.0, 63.0};
        CHECK_THROWS_AS(frequency_scan(sc, sim, zeq), InvalidRange);
    }
    SECTION("nonpositive frequency") {
        ScanConfig sc;
        sc.frequencies_hz = {-5.0};
        CHECK_THROWS_AS(frequency_scan(sc, sim, zeq), InvalidRange);
    }
}

TEST_CASE("scan closes on the analytic impedance at spot frequencies") {
    const auto cfg = default_config();
    SimConfig sim = cfg.sim_config();
    sim.va_schedule = {{0.0, VaMode::proposed}};
    const auto zeq = z_eq_delay(yv_prop(cfg.va_proposed), cfg.controller, cfg.plant);

    ScanConfig sc;
    sc.frequencies_hz = {150.0, 348.0, 1000.0};
    sc.settle_cycles = 4;
    sc.measure_cycles = 8;
    sc.warmup_s = 0.25;
    const ScanResult res = frequency_scan(sc, sim, zeq, 3);
    REQUIRE(res.records.size() == 3);
    for (const auto& r : res.records) {
        REQUIRE(r.status == ScanPointStatus::ok);
        CHECK(std::abs(r.mag_err_pct) <= 5.0);
        CHECK(std::abs(r.phase_err_deg) <= 5.0);
    }
}

TEST_CASE("scan linearity in the injection amplitude", "[property]") {
    const auto cfg = default_config();
    SimConfig sim = cfg.sim_config();
    sim.va_schedule = {{0.0, VaMode::proposed}};
    const auto zeq = z_eq_delay(yv_prop(cfg.va_proposed), cfg.controller, cfg.plant);

    ScanConfig sc;
    sc.frequencies_hz = {348.0};
    sc.settle_cycles = 4;
    sc.measure_cycles = 8;
    sc.warmup_s = 0.25;
    sc.injection_amplitude_v = 0.005 * sim.nominal_emf_peak();
    const auto z1 = frequency_scan(sc, sim, zeq).records[0].z_measured;
    sc.injection_amplitude_v *= 0.5;
    const auto z2 = frequency_scan(sc, sim, zeq).records[0].z_measured;
    CHECK(std::abs(z1 - z2) / std::abs(z1) < 0.01);
}

TEST_CASE("scanning an unstable configuration flags the point") {
    const auto cfg = default_config();
    SimConfig sim = cfg.sim_config();
    sim.va_schedule = {{0.0, VaMode::conventional}};
    sim.saturation_enabled = false;
    const auto zeq = z_eq_delay(yv_conv(cfg.va_conventional), cfg.controller, cfg.plant);

    ScanConfig sc;
    sc.frequencies_hz = {200.0};
    sc.settle_cycles = 2;
    sc.measure_cycles = 6;
    sc.warmup_s = 0.05;
    const ScanResult res = frequency_scan(sc, sim, zeq);
    REQUIRE(res.records.size() == 1);
    CHECK(res.records[0].status == ScanPointStatus::unstable);
}
