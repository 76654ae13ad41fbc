#pragma once

// Configuration file handling for the CLI. The file is JSON with one section
// per subsystem; every physical key carries an explicit SI unit suffix and
// unknown keys are rejected. Missing keys fall back to the bench defaults,
// which the CLI prints at startup.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gfmp/impedance.hpp"
#include "gfmp/measurement.hpp"
#include "gfmp/models.hpp"
#include "gfmp/simulator.hpp"

namespace gfmp {

using json = nlohmann::json;

/// Fully resolved tool configuration.
struct Config {
    PlantParams plant;
    GridParams grid;
    ControllerParams controller;
    DroopParams droop;
    VaParams va_conventional;
    DesignPoint va_design_point;
    ProposedVaParams va_proposed; // synthesized from the design point
    // simulation
    double p_ref_w = 2000.0;
    double q_ref_var = 0.0;
    double t_end_s = 0.6;
    int plant_substeps = 10;
    bool saturation_enabled = true;
    double dither_v = 0.0;
    std::uint64_t seed = 0;
    std::vector<ScheduleEntry> schedule{{0.0, VaMode::proposed},
                                        {0.4, VaMode::conventional},
                                        {0.5, VaMode::proposed}};
    // scan (an absent frequency list resolves to 20 log points 100..2000;
    // an explicitly empty list stays empty and the scan becomes a no-op)
    std::optional<std::vector<double>> scan_frequencies_hz;
    double scan_injection_v = 0.0;           // 0: default 0.5% of nominal peak
    int scan_settle_cycles = 5;
    int scan_measure_cycles = 10;
    double scan_warmup_s = 0.3;
    // fft
    std::string fft_window = "hann";
    std::string fft_channel = "i_a";
    double fft_t0_s = 0.0;
    double fft_t1_s = 0.0; // 0: end of trace
    // analysis grid
    double grid_f_min_hz = 10.0;
    double grid_f_max_hz = 10e3;
    int grid_points_per_decade = 200;

    SimConfig sim_config() const {
        SimConfig s;
        s.plant = plant;
        s.grid = grid;
        s.controller = controller;
        s.droop = droop;
        s.va_conventional = va_conventional;
        s.va_proposed = va_proposed;
        s.va_schedule = schedule;
        s.p_ref = p_ref_w;
        s.q_ref = q_ref_var;
        s.t_end = t_end_s;
        s.plant_substeps = plant_substeps;
        s.saturation_enabled = saturation_enabled;
        s.dither_v = dither_v;
        s.seed = seed;
        return s;
    }

    ScanConfig scan_config() const {
        ScanConfig sc;
        if (!scan_frequencies_hz.has_value()) {
            for (int k = 0; k < 20; ++k) {
                sc.frequencies_hz.push_back(100.0 * std::pow(20.0, k / 19.0));
            }
        } else {
            sc.frequencies_hz = *scan_frequencies_hz;
        }
        sc.injection_amplitude_v = scan_injection_v;
        sc.settle_cycles = scan_settle_cycles;
        sc.measure_cycles = scan_measure_cycles;
        sc.warmup_s = scan_warmup_s;
        return sc;
    }

    FrequencyGrid analysis_grid() const {
        return log_grid(grid_f_min_hz, grid_f_max_hz, grid_points_per_decade);
    }
};

/// Bench defaults for every section.
inline Config default_config() {
    Config c;
    c.plant = defaults::plant();
    c.grid = defaults::grid();
    c.controller = defaults::controller();
    c.droop.s_base = defaults::p_rated_w;
    c.droop.v_base = defaults::v_g_ll_rms;
    c.droop.omega_base = defaults::omega_1();
    c.va_conventional = defaults::va_conventional();
    c.va_design_point = defaults::design_point();
    c.va_proposed = design_proposed_va(c.va_design_point);
    return c;
}

namespace detail {

class SectionReader {
    const json* j_;
    std::string name_;
    std::set<std::string> seen_;

public:
    SectionReader(const json& parent, const std::string& name) : j_(nullptr), name_(name) {
        if (parent.contains(name)) {
            if (!parent.at(name).is_object()) {
                throw FileFormatError("config section '" + name + "' must be an object");
            }
            j_ = &parent.at(name);
        }
    }

    template <typename T>
    void get(const char* key, T& target) {
        seen_.insert(key);
        if (!j_ || !j_->contains(key)) return;
        try {
            target = j_->at(key).get<T>();
        } catch (const json::exception& e) {
            throw FileFormatError("config key '" + name_ + "." + key + "': " + e.what());
        }
    }

    /// Mark a key handled elsewhere so finish() accepts it.
    const json* raw(const char* key) {
        seen_.insert(key);
        return (j_ && j_->contains(key)) ? &j_->at(key) : nullptr;
    }

    void finish() const {
        if (!j_) return;
        for (auto it = j_->begin(); it != j_->end(); ++it) {
            if (!seen_.count(it.key())) {
                throw FileFormatError("unknown config key '" + name_ + "." + it.key() + "'");
            }
        }
    }
};

inline std::vector<ScheduleEntry> parse_schedule(const json& arr) {
    std::vector<ScheduleEntry> out;
    for (const auto& e : arr) {
        ScheduleEntry s;
        if (!e.contains("t_s") || !e.contains("va")) {
            throw FileFormatError("schedule entries need 't_s' and 'va'");
        }
        s.t_start = e.at("t_s").get<double>();
        const std::string mode = e.at("va").get<std::string>();
        if (mode == "conventional") {
            s.mode = VaMode::conventional;
        } else if (mode == "proposed") {
            s.mode = VaMode::proposed;
        } else {
            throw FileFormatError("schedule 'va' must be 'conventional' or 'proposed'");
        }
        out.push_back(s);
    }
    return out;
}

} // namespace detail

/// Resolve a parsed JSON document against the defaults. Unknown sections or
/// keys raise FileFormatError.
inline Config resolve_config(const json& doc) {
    if (!doc.is_object()) throw FileFormatError("config root must be a JSON object");
    static const std::set<std::string> known_sections = {
        "plant", "grid", "controller", "droop", "va_conventional",
        "va_design_point", "simulation", "scan", "fft", "analysis_grid"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (!known_sections.count(it.key())) {
            throw FileFormatError("unknown config section '" + it.key() + "'");
        }
    }

    Config c = default_config();

    {
        detail::SectionReader s(doc, "plant");
        s.get("l_f_h", c.plant.l_f);
        s.get("c_f_f", c.plant.c_f);
        s.get("v_dc_v", c.plant.v_dc);
        s.finish();
    }
    bool grid_direct = false;
    {
        detail::SectionReader s(doc, "grid");
        s.get("v_g_ll_rms_v", c.grid.v_g_ll_rms);
        s.get("scr", c.grid.scr);
        s.get("xr_ratio", c.grid.xr_ratio);
        s.get("p_rated_w", c.grid.p_rated);
        double rg = -1.0, lg = -1.0;
        s.get("r_g_ohm", rg);
        s.get("l_g_h", lg);
        s.finish();
        if (rg >= 0.0 || lg >= 0.0) {
            if (rg < 0.0 || lg < 0.0) {
                throw FileFormatError("grid: r_g_ohm and l_g_h must be given together");
            }
            c.grid.r_g = rg;
            c.grid.l_g = lg;
            grid_direct = true;
        }
    }
    {
        detail::SectionReader s(doc, "controller");
        double f1_hz = -1.0, f_cc_hz = -1.0;
        s.get("f1_hz", f1_hz);
        s.get("f_cc_hz", f_cc_hz);
        s.get("f_s_hz", c.controller.f_s);
        if (f1_hz > 0.0) c.controller.omega_1 = 2.0 * std::numbers::pi * f1_hz;
        if (f_cc_hz > 0.0) c.controller.omega_cc = 2.0 * std::numbers::pi * f_cc_hz;
        // gains re-derived from the tuning rule unless explicitly overridden
        c.controller.k_cc_p = c.controller.omega_cc * c.plant.l_f;
        c.controller.k_cc_r = 2.0 * c.controller.k_cc_p * c.controller.omega_cc / 10.0;
        s.get("k_cc_p_v_per_a", c.controller.k_cc_p);
        s.get("k_cc_r", c.controller.k_cc_r);
        bool with_delay = true;
        s.get("delay_enabled", with_delay);
        c.controller.t_d = with_delay ? 1.5 / c.controller.f_s : 0.0;
        s.finish();
    }
    if (!grid_direct) {
        c.grid = zg_from_scr(c.grid, c.controller.omega_1).first;
    }
    {
        detail::SectionReader s(doc, "droop");
        s.get("k_p_pu", c.droop.k_p_pu);
        s.get("k_q_pu", c.droop.k_q_pu);
        s.get("omega_p_pu", c.droop.omega_p_pu);
        s.get("omega_q_pu", c.droop.omega_q_pu);
        s.finish();
        c.droop.s_base = c.grid.p_rated;
        c.droop.v_base = c.grid.v_g_ll_rms;
        c.droop.omega_base = c.controller.omega_1;
    }
    {
        detail::SectionReader s(doc, "va_conventional");
        s.get("r_v_ohm", c.va_conventional.r_v);
        s.get("l_v_h", c.va_conventional.l_v);
        s.finish();
    }
    {
        detail::SectionReader s(doc, "va_design_point");
        c.va_design_point.r_v = c.va_conventional.r_v;
        c.va_design_point.x_v = c.controller.omega_1 * c.va_conventional.l_v;
        c.va_design_point.omega_1 = c.controller.omega_1;
        s.get("r_v_ohm", c.va_design_point.r_v);
        s.get("x_v_ohm", c.va_design_point.x_v);
        s.get("r_v_sigma_ohm", c.va_design_point.r_v_sigma);
        s.finish();
        c.va_proposed = design_proposed_va(c.va_design_point);
    }
    {
        detail::SectionReader s(doc, "simulation");
        s.get("p_ref_w", c.p_ref_w);
        s.get("q_ref_var", c.q_ref_var);
        s.get("t_end_s", c.t_end_s);
        s.get("plant_substeps", c.plant_substeps);
        s.get("saturation_enabled", c.saturation_enabled);
        s.get("dither_v", c.dither_v);
        s.get("seed", c.seed);
        if (const json* sched = s.raw("schedule")) {
            c.schedule = detail::parse_schedule(*sched);
        }
        s.finish();
    }
    {
        detail::SectionReader s(doc, "scan");
        if (const json* fr = s.raw("frequencies_hz")) {
            try {
                c.scan_frequencies_hz = fr->get<std::vector<double>>();
            } catch (const json::exception& e) {
                throw FileFormatError(std::string("config key 'scan.frequencies_hz': ") + e.what());
            }
        }
        s.get("injection_amplitude_v", c.scan_injection_v);
        s.get("settle_cycles", c.scan_settle_cycles);
        s.get("measure_cycles", c.scan_measure_cycles);
        s.get("warmup_s", c.scan_warmup_s);
        s.finish();
    }
    {
        detail::SectionReader s(doc, "fft");
        s.get("window", c.fft_window);
        s.get("channel", c.fft_channel);
        s.get("t0_s", c.fft_t0_s);
        s.get("t1_s", c.fft_t1_s);
        s.finish();
    }
    {
        detail::SectionReader s(doc, "analysis_grid");
        s.get("f_min_hz", c.grid_f_min_hz);
        s.get("f_max_hz", c.grid_f_max_hz);
        s.get("points_per_decade", c.grid_points_per_decade);
        s.finish();
    }

    c.plant.validate();
    c.grid.validate();
    c.controller.validate();
    c.droop.validate();
    c.va_conventional.validate();
    c.va_proposed.validate();
    return c;
}

/// Serialize the resolved configuration; resolve_config(config_to_json(c))
/// reproduces c exactly.
inline json config_to_json(const Config& c) {
    json doc;
    doc["plant"] = {{"l_f_h", c.plant.l_f}, {"c_f_f", c.plant.c_f}, {"v_dc_v", c.plant.v_dc}};
    doc["grid"] = {{"v_g_ll_rms_v", c.grid.v_g_ll_rms}, {"scr", c.grid.scr},
                   {"xr_ratio", c.grid.xr_ratio},       {"p_rated_w", c.grid.p_rated},
                   {"r_g_ohm", c.grid.r_g},             {"l_g_h", c.grid.l_g}};
    doc["controller"] = {{"f1_hz", c.controller.omega_1 / (2.0 * std::numbers::pi)},
                         {"f_cc_hz", c.controller.omega_cc / (2.0 * std::numbers::pi)},
                         {"f_s_hz", c.controller.f_s},
                         {"k_cc_p_v_per_a", c.controller.k_cc_p},
                         {"k_cc_r", c.controller.k_cc_r},
                         {"delay_enabled", c.controller.t_d > 0.0}};
    doc["droop"] = {{"k_p_pu", c.droop.k_p_pu},
                    {"k_q_pu", c.droop.k_q_pu},
                    {"omega_p_pu", c.droop.omega_p_pu},
                    {"omega_q_pu", c.droop.omega_q_pu}};
    doc["va_conventional"] = {{"r_v_ohm", c.va_conventional.r_v}, {"l_v_h", c.va_conventional.l_v}};
    doc["va_design_point"] = {{"r_v_ohm", c.va_design_point.r_v},
                              {"x_v_ohm", c.va_design_point.x_v},
                              {"r_v_sigma_ohm", c.va_design_point.r_v_sigma}};
    json sched = json::array();
    for (const auto& e : c.schedule) {
        sched.push_back({{"t_s", e.t_start}, {"va", to_string(e.mode)}});
    }
    doc["simulation"] = {{"p_ref_w", c.p_ref_w},
                         {"q_ref_var", c.q_ref_var},
                         {"t_end_s", c.t_end_s},
                         {"plant_substeps", c.plant_substeps},
                         {"saturation_enabled", c.saturation_enabled},
                         {"dither_v", c.dither_v},
                         {"seed", c.seed},
                         {"schedule", sched}};
    doc["scan"] = {{"frequencies_hz", c.scan_config().frequencies_hz},
                   {"injection_amplitude_v", c.scan_injection_v},
                   {"settle_cycles", c.scan_settle_cycles},
                   {"measure_cycles", c.scan_measure_cycles},
                   {"warmup_s", c.scan_warmup_s}};
    doc["fft"] = {{"window", c.fft_window},
                  {"channel", c.fft_channel},
                  {"t0_s", c.fft_t0_s},
                  {"t1_s", c.fft_t1_s}};
    doc["analysis_grid"] = {{"f_min_hz", c.grid_f_min_hz},
                            {"f_max_hz", c.grid_f_max_hz},
                            {"points_per_decade", c.grid_points_per_decade}};
    return doc;
}

} // namespace gfmp
