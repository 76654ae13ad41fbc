#pragma once

// CSV and JSON emission for reports and traces, plus the trace CSV reader
// used by the fft subcommand. Numeric formatting is fixed so identical inputs
// produce byte-identical files.

#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfmp/impedance.hpp"
#include "gfmp/measurement.hpp"
#include "gfmp/simulator.hpp"
#include "gfmp/spectrum.hpp"

namespace gfmp {

inline constexpr int report_schema_version = 1;

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileFormatError("cannot open '" + path + "' for writing");
    out << content;
}

} // namespace detail

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    case Verdict::marginal: return "marginal";
    }
    return "?";
}

/// Bode CSV of one element: f_hz, re, im, magnitude in dB, phase in degrees.
inline void write_bode_csv(const std::string& path, const TransferElement& elem,
                           const FrequencyGrid& grid) {
    std::ostringstream os;
    os << "f_hz,re_zeq_ohm,im_zeq_ohm,mag_db,phase_deg\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Complex v = elem.at_omega(grid.omega(k));
        os << detail::fmt(grid.hz(k)) << ',' << detail::fmt(v.real()) << ','
           << detail::fmt(v.imag()) << ',' << detail::fmt(20.0 * std::log10(std::abs(v))) << ','
           << detail::fmt(std::arg(v) * 180.0 / std::numbers::pi) << '\n';
    }
    detail::write_file(path, os.str());
}

inline json passivity_to_json(const PassivityReport& rep) {
    json bands = json::array();
    for (const auto& [lo, hi] : rep.non_passive_bands) {
        bands.push_back({{"f_lo_hz", lo}, {"f_hi_hz", hi}});
    }
    json j;
    j["schema_version"] = report_schema_version;
    j["non_passive_bands"] = bands;
    if (rep.first_violation_hz) {
        j["first_violation_hz"] = *rep.first_violation_hz;
    } else {
        j["first_violation_hz"] = nullptr;
    }
    j["min_re_ohm"] = rep.min_re;
    j["min_re_hz"] = rep.min_re_hz;
    return j;
}

inline json stability_to_json(const StabilityAssessment& sa) {
    json j;
    j["schema_version"] = report_schema_version;
    j["gain_crossover_hz"] = sa.gain_crossover_hz;
    j["phase_crossover_hz"] = sa.phase_crossover_hz;
    j["encirclements_of_minus_one"] = sa.encirclements_of_minus_one;
    j["verdict"] = to_string(sa.verdict);
    j["min_dist_to_minus_one"] = sa.min_dist_to_minus_one;
    return j;
}

/// Trace CSV, one row per control period.
inline void write_trace_csv(const std::string& path, const SimTrace& trace) {
    std::ostringstream os;
    os << "t_s,e_alpha,e_beta,vpcc_alpha,vpcc_beta,i_alpha,i_beta,iref_alpha,iref_beta,"
          "p_w,q_var,va_mode\n";
    for (const auto& r : trace.records) {
        os << detail::fmt(r.t) << ',' << detail::fmt(r.e.real()) << ',' << detail::fmt(r.e.imag())
           << ',' << detail::fmt(r.v_pcc.real()) << ',' << detail::fmt(r.v_pcc.imag()) << ','
           << detail::fmt(r.i.real()) << ',' << detail::fmt(r.i.imag()) << ','
           << detail::fmt(r.i_ref.real()) << ',' << detail::fmt(r.i_ref.imag()) << ','
           << detail::fmt(r.p) << ',' << detail::fmt(r.q) << ',' << to_string(r.va_mode) << '\n';
    }
    detail::write_file(path, os.str());
}

/// Read back a trace CSV written by write_trace_csv.
inline SimTrace read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileFormatError("cannot open trace file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw FileFormatError("trace file is empty");
    if (line.rfind("t_s,", 0) != 0) throw FileFormatError("not a trace CSV (bad header)");
    SimTrace trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 12) throw FileFormatError("trace row with wrong column count");
        TraceRecord r;
        try {
            r.t = std::stod(cells[0]);
            r.e = {std::stod(cells[1]), std::stod(cells[2])};
            r.v_pcc = {std::stod(cells[3]), std::stod(cells[4])};
            r.i = {std::stod(cells[5]), std::stod(cells[6])};
            r.i_ref = {std::stod(cells[7]), std::stod(cells[8])};
            r.p = std::stod(cells[9]);
            r.q = std::stod(cells[10]);
        } catch (const std::exception&) {
            throw FileFormatError("trace row with non-numeric cell");
        }
        r.va_mode = (cells[11] == "conventional") ? VaMode::conventional : VaMode::proposed;
        trace.records.push_back(r);
    }
    if (trace.records.size() >= 2) {
        trace.sample_time = trace.records[1].t - trace.records[0].t;
    }
    return trace;
}

inline void write_scan_csv(const std::string& path, const ScanResult& res) {
    std::ostringstream os;
    os << "f_hz,z_meas_re_ohm,z_meas_im_ohm,z_analytic_re_ohm,z_analytic_im_ohm,"
          "mag_err_pct,phase_err_deg,status\n";
    for (const auto& r : res.records) {
        os << detail::fmt(r.f_hz) << ',' << detail::fmt(r.z_measured.real()) << ','
           << detail::fmt(r.z_measured.imag()) << ',' << detail::fmt(r.z_analytic.real()) << ','
           << detail::fmt(r.z_analytic.imag()) << ',' << detail::fmt(r.mag_err_pct) << ','
           << detail::fmt(r.phase_err_deg) << ','
           << (r.status == ScanPointStatus::ok ? "ok" : "unstable") << '\n';
    }
    detail::write_file(path, os.str());
}

inline json scan_to_json(const ScanResult& res) {
    json pts = json::array();
    for (const auto& r : res.records) {
        pts.push_back({{"f_hz", r.f_hz},
                       {"z_meas_re_ohm", r.z_measured.real()},
                       {"z_meas_im_ohm", r.z_measured.imag()},
                       {"z_analytic_re_ohm", r.z_analytic.real()},
                       {"z_analytic_im_ohm", r.z_analytic.imag()},
                       {"mag_err_pct", r.mag_err_pct},
                       {"phase_err_deg", r.phase_err_deg},
                       {"status", r.status == ScanPointStatus::ok ? "ok" : "unstable"}});
    }
    json j;
    j["schema_version"] = report_schema_version;
    j["points"] = pts;
    j["max_mag_err_pct"] = res.max_mag_err_pct;
    j["max_phase_err_deg"] = res.max_phase_err_deg;
    return j;
}

inline void write_spectrum_csv(const std::string& path, const SpectrumReport& rep) {
    std::ostringstream os;
    os << "f_hz,magnitude\n";
    for (std::size_t k = 0; k < rep.f_hz.size(); ++k) {
        os << detail::fmt(rep.f_hz[k]) << ',' << detail::fmt(rep.magnitude[k]) << '\n';
    }
    detail::write_file(path, os.str());
}

inline json spectrum_to_json(const SpectrumReport& rep) {
    json j;
    j["schema_version"] = report_schema_version;
    j["dominant_harmonic_hz"] = rep.dominant_harmonic_hz;
    j["dominant_magnitude"] = rep.dominant_magnitude;
    j["window"] = to_string(rep.window);
    j["fundamental_hz"] = rep.fundamental_hz;
    return j;
}

} // namespace gfmp
