#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "gfmp/config.hpp"
#include "gfmp/report_io.hpp"

using namespace gfmp;
using Catch::Approx;

TEST_CASE("empty document resolves to the bench defaults") {
    const Config c = resolve_config(json::object());
    CHECK(c.plant.l_f == Approx(3.4e-3));
    CHECK(c.plant.c_f == Approx(30e-6));
    CHECK(c.grid.r_g == Approx(0.978227).margin(1e-5));
    CHECK(c.grid.l_g == Approx(10.379311e-3).margin(1e-8));
    CHECK(c.controller.k_cc_p == Approx(10.6814).margin(1e-4));
    CHECK(c.controller.t_d == Approx(75e-6));
    CHECK(c.va_proposed.r_v_pi == Approx(25.698).margin(5e-3));
    REQUIRE(c.schedule.size() == 3);
    CHECK(c.schedule[1].t_start == Approx(0.4));
    CHECK(c.schedule[1].mode == VaMode::conventional);
}

TEST_CASE("config snapshot round-trips exactly") {
    const Config c = default_config();
    const json snap = config_to_json(c);
    const Config c2 = resolve_config(snap);
    CHECK(config_to_json(c2).dump() == snap.dump());
}

TEST_CASE("unknown keys and sections are rejected") {
    CHECK_THROWS_AS(resolve_config(json::parse(R"({"plantz": {}})")), FileFormatError);
    CHECK_THROWS_AS(resolve_config(json::parse(R"({"plant": {"l_f_mh": 3.4}})")), FileFormatError);
    CHECK_THROWS_AS(resolve_config(json::parse(R"({"grid": {"scr": 4, "bogus": 1}})")),
                    FileFormatError);
    CHECK_NOTHROW(resolve_config(json::parse(R"({"plant": {"l_f_h": 0.0034}})")));
}

TEST_CASE("grid direct override replaces the SCR sizing") {
    const Config c =
        resolve_config(json::parse(R"({"grid": {"r_g_ohm": 0.5, "l_g_h": 0.005}})"));
    CHECK(c.grid.r_g == Approx(0.5));
    CHECK(c.grid.l_g == Approx(0.005));
    CHECK_THROWS_AS(resolve_config(json::parse(R"({"grid": {"r_g_ohm": 0.5}})")), FileFormatError);
}

TEST_CASE("controller overrides") {
    const Config c = resolve_config(
        json::parse(R"({"controller": {"k_cc_p_v_per_a": 8.0, "delay_enabled": false}})"));
    CHECK(c.controller.k_cc_p == Approx(8.0));
    CHECK(c.controller.t_d == 0.0);
    // resonant default still follows the tuning rule on the default omega_cc
    CHECK(c.controller.k_cc_r ==
          Approx(2.0 * c.controller.omega_cc * 3.4e-3 * c.controller.omega_cc / 10.0)
              .epsilon(1e-9));
}

TEST_CASE("schedule parsing and validation") {
    const Config c = resolve_config(json::parse(
        R"({"simulation": {"schedule": [{"t_s": 0, "va": "conventional"}, {"t_s": 0.2, "va": "proposed"}]}})"));
    REQUIRE(c.schedule.size() == 2);
    CHECK(c.schedule[0].mode == VaMode::conventional);
    CHECK_THROWS_AS(
        resolve_config(json::parse(R"({"simulation": {"schedule": [{"t_s": 0, "va": "x"}]}})")),
        FileFormatError);
}

TEST_CASE("degenerate design point is rejected at resolution time") {
    CHECK_THROWS_AS(
        resolve_config(json::parse(R"({"va_design_point": {"r_v_sigma_ohm": 0.754}})")),
        Error);
    CHECK_THROWS_AS(
        resolve_config(json::parse(R"({"va_design_point": {"r_v_sigma_ohm": 0.9}})")),
        Error);
}

TEST_CASE("scan section defaults produce the 20-point 100..2000 Hz list") {
    const Config c = resolve_config(json::object());
    const ScanConfig sc = c.scan_config();
    REQUIRE(sc.frequencies_hz.size() == 20);
    CHECK(sc.frequencies_hz.front() == Approx(100.0));
    CHECK(sc.frequencies_hz.back() == Approx(2000.0));

    // an explicitly empty list stays empty
    const Config c2 = resolve_config(json::parse(R"({"scan": {"frequencies_hz": []}})"));
    CHECK(c2.scan_config().frequencies_hz.empty());
}

TEST_CASE("trace CSV round trip") {
    SimTrace tr;
    tr.sample_time = 5e-5;
    for (int k = 0; k < 30; ++k) {
        TraceRecord r;
        r.t = k * tr.sample_time;
        r.e = {1.5 * k, -0.25};
        r.v_pcc = {100.0 + k, 3.0};
        r.i = {0.1 * k, -0.2 * k};
        r.i_ref = {0.1 * k, -0.19 * k};
        r.p = 2000.0 + k;
        r.q = -10.0 * k;
        r.va_mode = (k < 15) ? VaMode::proposed : VaMode::conventional;
        tr.records.push_back(r);
    }
    const std::string path = "trace_roundtrip_test.csv";
    write_trace_csv(path, tr);
    const SimTrace back = read_trace_csv(path);
    REQUIRE(back.records.size() == tr.records.size());
    CHECK(back.sample_time == Approx(tr.sample_time).epsilon(1e-9));
    for (std::size_t k = 0; k < tr.records.size(); ++k) {
        CHECK(std::abs(back.records[k].i - tr.records[k].i) <= 1e-9 * (1.0 + std::abs(tr.records[k].i)));
        CHECK(std::abs(back.records[k].v_pcc - tr.records[k].v_pcc) <=
              1e-9 * std::abs(tr.records[k].v_pcc));
        CHECK(back.records[k].va_mode == tr.records[k].va_mode);
    }
    std::remove(path.c_str());
}

TEST_CASE("malformed trace files are rejected") {
    const std::string path = "trace_bad_test.csv";
    {
        std::ofstream f(path);
        f << "wrong,header\n1,2\n";
    }
    CHECK_THROWS_AS(read_trace_csv(path), FileFormatError);
    {
        std::ofstream f(path);
        f << "t_s,e_alpha,e_beta,vpcc_alpha,vpcc_beta,i_alpha,i_beta,iref_alpha,iref_beta,"
             "p_w,q_var,va_mode\n0,1,2\n";
    }
    CHECK_THROWS_AS(read_trace_csv(path), FileFormatError);
    {
        std::ofstream f(path);
        f << "t_s,e_alpha,e_beta,vpcc_alpha,vpcc_beta,i_alpha,i_beta,iref_alpha,iref_beta,"
             "p_w,q_var,va_mode\n0,x,2,3,4,5,6,7,8,9,10,proposed\n";
    }
    CHECK_THROWS_AS(read_trace_csv(path), FileFormatError);
    CHECK_THROWS_AS(read_trace_csv("definitely_missing_file.csv"), FileFormatError);
    std::remove(path.c_str());
}
