// gfmp — impedance, passivity and time-domain analysis of virtual-admittance
// grid-forming inverters. Subcommands mirror the bench workflow: design the
// parallel-resistor admittance, plot/scan the equivalent impedance, run the
// mode-transition simulation, frequency-scan the simulated inverter, and FFT
// recorded traces.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gfmp/config.hpp"
#include "gfmp/impedance.hpp"
#include "gfmp/measurement.hpp"
#include "gfmp/report_io.hpp"
#include "gfmp/simulator.hpp"
#include "gfmp/spectrum.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitNumeric = 3;

unsigned thread_cap() {
    if (const char* env = std::getenv("GFMP_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

struct Manifest {
    gfmp::json config_snapshot;
    std::string subcommand;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void write(const std::string& out_dir) const {
        namespace ch = std::chrono;
        gfmp::json j;
        j["schema_version"] = gfmp::report_schema_version;
        j["tool_version"] = kToolVersion;
        j["subcommand"] = subcommand;
        j["resolved_config"] = config_snapshot;
        j["outputs"] = outputs;
        j["wall_clock_s"] =
            ch::duration_cast<ch::duration<double>>(ch::steady_clock::now() - t0).count();
        std::ofstream f(out_dir + "/manifest_" + subcommand + ".json");
        f << j.dump(2) << '\n';
    }
};

void write_plot_script(const std::string& path, const std::string& body, Manifest& man) {
    std::ofstream f(path);
    f << "#!/usr/bin/env python3\n"
      << "# companion plot for the CSV files produced by the same run\n"
      << "import csv, math\n"
      << "import matplotlib.pyplot as plt\n\n"
      << "def load(name):\n"
      << "    with open(name) as f:\n"
      << "        rows = list(csv.DictReader(f))\n"
      << "    return {k: [float(r[k]) for r in rows] for k in rows[0] if k != 'status' and k != 'va_mode'}\n\n"
      << body;
    man.outputs.push_back(path);
}

gfmp::Config load_config(const std::string& path) {
    if (path.empty()) {
        std::cout << "no config file given; using bench defaults\n";
        return gfmp::default_config();
    }
    std::ifstream in(path);
    if (!in) throw gfmp::FileFormatError("cannot open config file '" + path + "'");
    gfmp::json doc;
    try {
        in >> doc;
    } catch (const gfmp::json::exception& e) {
        throw gfmp::FileFormatError(std::string("config is not valid JSON: ") + e.what());
    }
    return gfmp::resolve_config(doc);
}

void print_resolved(const gfmp::Config& cfg) {
    std::cout << "resolved configuration (defaults fill missing keys):\n"
              << gfmp::config_to_json(cfg).dump(2) << "\n";
}

std::vector<gfmp::ScheduleEntry> parse_schedule_flag(const std::string& text) {
    std::vector<gfmp::ScheduleEntry> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw gfmp::FileFormatError("--schedule entries look like '0.4:conventional'");
        }
        gfmp::ScheduleEntry e;
        e.t_start = std::stod(item.substr(0, colon));
        const std::string mode = item.substr(colon + 1);
        if (mode == "conventional" || mode == "conv") {
            e.mode = gfmp::VaMode::conventional;
        } else if (mode == "proposed" || mode == "prop") {
            e.mode = gfmp::VaMode::proposed;
        } else {
            throw gfmp::FileFormatError("unknown va mode '" + mode + "' in --schedule");
        }
        out.push_back(e);
    }
    return out;
}

void apply_grid_spec(gfmp::Config& cfg, const std::string& spec) {
    double scr = 0.0, xr = 0.0, rg = -1.0, lg = -1.0;
    std::istringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw gfmp::FileFormatError("--grid-spec wants k=v pairs");
        const std::string key = item.substr(0, eq);
        const double val = std::stod(item.substr(eq + 1));
        if (key == "scr") scr = val;
        else if (key == "xr") xr = val;
        else if (key == "rg") rg = val;
        else if (key == "lg") lg = val;
        else throw gfmp::FileFormatError("--grid-spec keys: scr, xr, rg, lg");
    }
    if (rg >= 0.0 && lg >= 0.0) {
        cfg.grid.r_g = rg;
        cfg.grid.l_g = lg;
        return;
    }
    if (scr > 0.0) cfg.grid.scr = scr;
    if (xr > 0.0) cfg.grid.xr_ratio = xr;
    cfg.grid = gfmp::zg_from_scr(cfg.grid, cfg.controller.omega_1).first;
}

// ---------------------------------------------------------------------------

int cmd_design(const gfmp::Config& cfg, const std::string& out_dir, Manifest& man) {
    const gfmp::ProposedVaParams p = gfmp::design_proposed_va(cfg.va_design_point);
    const gfmp::Complex at_w1 =
        gfmp::inverse(gfmp::yv_prop(p)).at_omega(cfg.va_design_point.omega_1);
    const gfmp::Complex target{cfg.va_design_point.r_v, cfg.va_design_point.x_v};
    const double residual = std::abs(at_w1 - target);

    std::printf("proposed VA design:\n");
    std::printf("  r_v_sigma_ohm = %.6f\n", p.r_v_sigma);
    std::printf("  r_v_pi_ohm    = %.6f\n", p.r_v_pi);
    std::printf("  l_v0_h        = %.9f\n", p.l_v0);
    std::printf("  design residual |Zv(jw1) - (Rv + jXv)| = %.3e ohm\n", residual);
    std::printf("  harmonic asymptote r_v_sigma + r_v_pi  = %.6f ohm\n",
                gfmp::harmonic_asymptote(p));

    gfmp::json j;
    j["schema_version"] = gfmp::report_schema_version;
    j["r_v_sigma_ohm"] = p.r_v_sigma;
    j["r_v_pi_ohm"] = p.r_v_pi;
    j["l_v0_h"] = p.l_v0;
    j["design_residual_ohm"] = residual;
    j["harmonic_asymptote_ohm"] = gfmp::harmonic_asymptote(p);
    const std::string path = out_dir + "/design.json";
    std::ofstream(path) << j.dump(2) << '\n';
    man.outputs.push_back(path);
    return kExitOk;
}

int cmd_impedance(const gfmp::Config& cfg, const std::string& out_dir, const std::string& variant,
                  const std::string& va, bool calibrate, bool plot_script, Manifest& man) {
    gfmp::ZeqModel model;
    model.controller = cfg.controller;
    model.plant = cfg.plant;
    gfmp::TransferElement yv = gfmp::TransferElement::constant(1.0);
    gfmp::TransferElement zv = gfmp::TransferElement::constant(1.0);
    if (va == "conv") {
        model.va = cfg.va_conventional;
        yv = gfmp::yv_conv(cfg.va_conventional);
        zv = gfmp::zv_conv(cfg.va_conventional);
    } else if (va == "prop") {
        model.va = cfg.va_proposed;
        yv = gfmp::yv_prop(cfg.va_proposed);
        zv = gfmp::zv_prop(cfg.va_proposed);
    } else {
        throw gfmp::FileFormatError("--va must be conv or prop");
    }
    if (variant == "ideal") model.variant = gfmp::ZeqVariant::ideal;
    else if (variant == "closed") model.variant = gfmp::ZeqVariant::conventional_closed_form;
    else if (variant == "delay") model.variant = gfmp::ZeqVariant::delay_aware;
    else throw gfmp::FileFormatError("--variant must be ideal, closed or delay");

    const gfmp::TransferElement zeq = gfmp::build_zeq(model);
    const gfmp::FrequencyGrid grid = cfg.analysis_grid();
    const std::string prefix = out_dir + "/" + va + "_" + variant;

    gfmp::write_bode_csv(prefix + "_zv_bode.csv", zv, grid);
    man.outputs.push_back(prefix + "_zv_bode.csv");
    gfmp::write_bode_csv(prefix + "_zeq_bode.csv", zeq, grid);
    man.outputs.push_back(prefix + "_zeq_bode.csv");

    const gfmp::PassivityReport rep = gfmp::passivity_scan(zeq, grid);
    std::ofstream(prefix + "_passivity.json") << gfmp::passivity_to_json(rep).dump(2) << '\n';
    man.outputs.push_back(prefix + "_passivity.json");
    std::printf("passivity: %zu non-passive band(s)", rep.non_passive_bands.size());
    if (rep.first_violation_hz) std::printf(", first violation at %.1f Hz", *rep.first_violation_hz);
    std::printf(" (min Re = %.4f ohm at %.1f Hz)\n", rep.min_re, rep.min_re_hz);

    const gfmp::TransferElement zg = gfmp::pcc_grid_impedance(cfg.grid, cfg.plant);
    try {
        const gfmp::StabilityAssessment sa = gfmp::return_ratio_assessment(zeq, zg, grid);
        std::ofstream(prefix + "_stability.json") << gfmp::stability_to_json(sa).dump(2) << '\n';
        man.outputs.push_back(prefix + "_stability.json");
        std::printf("return ratio: verdict %s, encirclements %d\n", gfmp::to_string(sa.verdict),
                    sa.encirclements_of_minus_one);
        auto print_list = [](const char* label, const std::vector<double>& xs) {
            std::printf("  %s:", label);
            for (double x : xs) std::printf(" %.1f", x);
            std::printf(" Hz\n");
        };
        print_list("gain crossovers", sa.gain_crossover_hz);
        print_list("phase crossovers", sa.phase_crossover_hz);
    } catch (const gfmp::GridTooCoarse& e) {
        std::fprintf(stderr,
                     "error: %s\nhint: raise analysis_grid.points_per_decade in the config\n",
                     e.what());
        return kExitBadInput;
    }

    if (plot_script) {
        write_plot_script(
            prefix + "_plot.py",
            "zv = load('" + va + "_" + variant + "_zv_bode.csv')\n"
            "zeq = load('" + va + "_" + variant + "_zeq_bode.csv')\n"
            "fig, ax = plt.subplots(2, 1, sharex=True)\n"
            "ax[0].semilogx(zv['f_hz'], zv['mag_db'], label='1/Yv')\n"
            "ax[0].semilogx(zeq['f_hz'], zeq['mag_db'], label='Zeq')\n"
            "ax[0].set_ylabel('|Z| (dB ohm)'); ax[0].legend(); ax[0].grid(True)\n"
            "ax[1].semilogx(zv['f_hz'], zv['phase_deg'])\n"
            "ax[1].semilogx(zeq['f_hz'], zeq['phase_deg'])\n"
            "ax[1].axhline(90, ls=':'); ax[1].axhline(-90, ls=':')\n"
            "ax[1].set_ylabel('phase (deg)'); ax[1].set_xlabel('f (Hz)'); ax[1].grid(True)\n"
            "plt.tight_layout(); plt.show()\n",
            man);
    }

    if (calibrate) {
        const gfmp::KccpCalibration cal =
            gfmp::calibrate_kccp(yv, cfg.controller, cfg.plant, zg, 5.0, 200.0);
        std::printf("calibration over k_cc_p in [5, 200] V/A (targets 358/293 Hz):\n");
        std::printf("  chosen k_cc_p = %.3f V/A\n", cal.k_cc_p);
        std::printf("  gain crossover %.1f Hz (%.2f%%), phase crossover %.1f Hz (%.2f%%)\n",
                    cal.gain_crossover_hz, 100.0 * cal.gain_err_rel, cal.phase_crossover_hz,
                    100.0 * cal.phase_err_rel);
        gfmp::json j;
        j["schema_version"] = gfmp::report_schema_version;
        j["k_cc_p"] = cal.k_cc_p;
        j["gain_crossover_hz"] = cal.gain_crossover_hz;
        j["phase_crossover_hz"] = cal.phase_crossover_hz;
        j["gain_err_rel"] = cal.gain_err_rel;
        j["phase_err_rel"] = cal.phase_err_rel;
        gfmp::json sweep = gfmp::json::array();
        for (const auto& pt : cal.sweep) {
            sweep.push_back({{"k_cc_p", pt.k_cc_p},
                             {"gain_crossover_hz", pt.gain_crossover_hz},
                             {"phase_crossover_hz", pt.phase_crossover_hz}});
        }
        j["sensitivity_sweep"] = sweep;
        const std::string path = prefix + "_calibration.json";
        std::ofstream(path) << j.dump(2) << '\n';
        man.outputs.push_back(path);
    }
    return kExitOk;
}

int cmd_simulate(const gfmp::Config& cfg, const std::string& out_dir,
                 const std::string& schedule_flag, const std::string& out_flag, bool plot_script,
                 Manifest& man) {
    gfmp::SimConfig sim = cfg.sim_config();
    if (!schedule_flag.empty()) sim.va_schedule = parse_schedule_flag(schedule_flag);
    const gfmp::SimTrace trace = gfmp::run(sim);

    const std::string trace_path =
        out_flag.empty() ? out_dir + "/trace.csv" : out_flag;
    gfmp::write_trace_csv(trace_path, trace);
    man.outputs.push_back(trace_path);
    if (plot_script) {
        write_plot_script(out_dir + "/plot_simulate.py",
                          "tr = load('" + trace_path.substr(trace_path.find_last_of('/') + 1) +
                              "')\n"
                              "fig, ax = plt.subplots(2, 1, sharex=True)\n"
                              "ax[0].plot(tr['t_s'], tr['i_alpha'])\n"
                              "ax[0].set_ylabel('i_alpha (A)'); ax[0].grid(True)\n"
                              "ax[1].plot(tr['t_s'], tr['p_w'])\n"
                              "ax[1].set_ylabel('P (W)'); ax[1].set_xlabel('t (s)')\n"
                              "ax[1].grid(True)\n"
                              "plt.tight_layout(); plt.show()\n",
                          man);
    }

    // steady-state stats over the last fifth of the run (or up to divergence)
    const double t_last = trace.records.empty() ? 0.0 : trace.records.back().t;
    const double t_from = std::max(0.0, t_last - 0.2 * sim.t_end);
    double p_mean = 0.0, q_mean = 0.0, p_max_dev = 0.0;
    std::size_t n = 0;
    for (const auto& r : trace.records) {
        if (r.t < t_from) continue;
        p_mean += r.p;
        q_mean += r.q;
        ++n;
    }
    if (n > 0) {
        p_mean /= static_cast<double>(n);
        q_mean /= static_cast<double>(n);
        for (const auto& r : trace.records) {
            if (r.t < t_from) continue;
            p_max_dev = std::max(p_max_dev, std::abs(r.p - p_mean));
        }
    }

    // growth rate over the last conventional interval, if the schedule has one
    double growth = 0.0;
    double conv_t0 = -1.0, conv_t1 = -1.0;
    for (std::size_t i = 0; i < sim.va_schedule.size(); ++i) {
        if (sim.va_schedule[i].mode != gfmp::VaMode::conventional) continue;
        conv_t0 = sim.va_schedule[i].t_start;
        conv_t1 = (i + 1 < sim.va_schedule.size()) ? sim.va_schedule[i + 1].t_start : t_last;
    }
    if (conv_t0 >= 0.0 && conv_t1 > conv_t0 && !trace.records.empty()) {
        growth = gfmp::estimate_growth_rate(trace, conv_t0, std::min(conv_t1, t_last),
                                            cfg.controller.omega_1 / (2.0 * std::numbers::pi));
    }

    gfmp::json j;
    j["schema_version"] = gfmp::report_schema_version;
    j["diverged"] = trace.diverged;
    if (trace.diverged) j["divergence_time_s"] = trace.divergence_time;
    j["p_mean_w"] = p_mean;
    j["q_mean_var"] = q_mean;
    j["p_max_dev_w"] = p_max_dev;
    j["growth_rate_per_s"] = growth;
    j["records"] = trace.records.size();
    const std::string sum_path = out_dir + "/simulate_summary.json";
    std::ofstream(sum_path) << j.dump(2) << '\n';
    man.outputs.push_back(sum_path);

    std::printf("simulated %zu control periods%s\n", trace.records.size(),
                trace.diverged ? " (diverged)" : "");
    if (trace.diverged) {
        std::printf("  divergence flagged at t = %.4f s (instability is a result, not an error)\n",
                    trace.divergence_time);
    }
    std::printf("  P mean %.1f W (max dev %.1f W), Q mean %.1f var over the last %.2f s\n", p_mean,
                p_max_dev, q_mean, t_last - t_from);
    if (conv_t0 >= 0.0) {
        std::printf("  dominant-oscillation growth rate in conventional interval: %.1f 1/s\n",
                    growth);
    }
    return kExitOk;
}

int cmd_scan(const gfmp::Config& cfg, const std::string& out_dir, bool plot_script, Manifest& man) {
    gfmp::ScanConfig scan = cfg.scan_config();
    if (scan.frequencies_hz.empty()) {
        std::printf("scan: empty frequency list, nothing to do\n");
        return kExitOk;
    }
    gfmp::SimConfig sim = cfg.sim_config();
    sim.va_schedule = {{0.0, gfmp::VaMode::proposed}};
    const gfmp::TransferElement zeq =
        gfmp::z_eq_delay(gfmp::yv_prop(cfg.va_proposed), cfg.controller, cfg.plant);
    const gfmp::ScanResult res = gfmp::frequency_scan(scan, sim, zeq, thread_cap());

    gfmp::write_scan_csv(out_dir + "/scan.csv", res);
    man.outputs.push_back(out_dir + "/scan.csv");
    std::ofstream(out_dir + "/scan.json") << gfmp::scan_to_json(res).dump(2) << '\n';
    man.outputs.push_back(out_dir + "/scan.json");
    if (plot_script) {
        write_plot_script(
            out_dir + "/plot_scan.py",
            "sc = load('scan.csv')\n"
            "zm = [complex(a, b) for a, b in zip(sc['z_meas_re_ohm'], sc['z_meas_im_ohm'])]\n"
            "za = [complex(a, b) for a, b in zip(sc['z_analytic_re_ohm'], sc['z_analytic_im_ohm'])]\n"
            "fig, ax = plt.subplots(2, 1, sharex=True)\n"
            "ax[0].loglog(sc['f_hz'], [abs(z) for z in za], label='analytic')\n"
            "ax[0].loglog(sc['f_hz'], [abs(z) for z in zm], 'o', label='measured')\n"
            "ax[0].set_ylabel('|Z| (ohm)'); ax[0].legend(); ax[0].grid(True)\n"
            "ax[1].semilogx(sc['f_hz'], [math.degrees(math.atan2(z.imag, z.real)) for z in za])\n"
            "ax[1].semilogx(sc['f_hz'], [math.degrees(math.atan2(z.imag, z.real)) for z in zm], 'o')\n"
            "ax[1].set_ylabel('phase (deg)'); ax[1].set_xlabel('f (Hz)'); ax[1].grid(True)\n"
            "plt.tight_layout(); plt.show()\n",
            man);
    }

    std::printf("scan of %zu frequencies: worst |mag err| %.2f%%, worst |phase err| %.2f deg\n",
                res.records.size(), res.max_mag_err_pct, res.max_phase_err_deg);
    for (const auto& r : res.records) {
        if (r.status != gfmp::ScanPointStatus::ok) {
            std::printf("  %.1f Hz: response still growing, point flagged unstable\n", r.f_hz);
        }
    }
    return kExitOk;
}

int cmd_fft(const gfmp::Config& cfg, const std::string& out_dir, const std::string& trace_path,
            const std::string& channel, const std::string& window, double t0, double t1,
            bool plot_script, Manifest& man) {
    if (t1 > 0.0 && t1 <= t0) throw gfmp::InvalidRange("--t1 must be after --t0");
    const gfmp::SimTrace trace = gfmp::read_trace_csv(trace_path);
    if (trace.records.empty()) throw gfmp::FileFormatError("trace has no rows");
    const double t_end = (t1 > 0.0) ? t1 : trace.records.back().t + trace.sample_time;

    gfmp::TraceChannel ch;
    if (channel == "i_a") ch = gfmp::TraceChannel::i_a;
    else if (channel == "i_b") ch = gfmp::TraceChannel::i_b;
    else if (channel == "i_c") ch = gfmp::TraceChannel::i_c;
    else if (channel == "i_alpha") ch = gfmp::TraceChannel::i_alpha;
    else if (channel == "i_beta") ch = gfmp::TraceChannel::i_beta;
    else if (channel == "v_a") ch = gfmp::TraceChannel::v_a;
    else if (channel == "v_alpha") ch = gfmp::TraceChannel::v_alpha;
    else if (channel == "v_beta") ch = gfmp::TraceChannel::v_beta;
    else throw gfmp::FileFormatError("unknown --channel '" + channel + "'");

    gfmp::SpectrumWindow win;
    if (window == "hann") win = gfmp::SpectrumWindow::hann;
    else if (window == "rectangular" || window == "rect") win = gfmp::SpectrumWindow::rectangular;
    else throw gfmp::FileFormatError("--window must be hann or rectangular");

    const double f1 = cfg.controller.omega_1 / (2.0 * std::numbers::pi);
    const gfmp::SpectrumReport rep = gfmp::fft_spectrum(trace, ch, win, t0, t_end, f1);

    gfmp::write_spectrum_csv(out_dir + "/spectrum.csv", rep);
    man.outputs.push_back(out_dir + "/spectrum.csv");
    std::ofstream(out_dir + "/spectrum.json") << gfmp::spectrum_to_json(rep).dump(2) << '\n';
    man.outputs.push_back(out_dir + "/spectrum.json");
    if (plot_script) {
        write_plot_script(out_dir + "/plot_spectrum.py",
                          "sp = load('spectrum.csv')\n"
                          "plt.semilogy(sp['f_hz'], sp['magnitude'])\n"
                          "plt.xlim(0, 2000)\n"
                          "plt.xlabel('f (Hz)'); plt.ylabel('amplitude')\n"
                          "plt.grid(True); plt.show()\n",
                          man);
    }

    std::printf("spectrum over [%.4f, %.4f] s, %s window, channel %s\n", t0, t_end,
                gfmp::to_string(rep.window), channel.c_str());
    std::printf("  dominant non-fundamental component: %.1f Hz, magnitude %.4f\n",
                rep.dominant_harmonic_hz, rep.dominant_magnitude);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"virtual-admittance grid-forming inverter stability toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    bool plot_script = false;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out-dir", out_dir, "directory for output files");
    app.add_flag("--plot-script", plot_script, "also emit a companion matplotlib script");

    auto* design = app.add_subcommand("design", "synthesize the parallel-resistor admittance");

    auto* impedance = app.add_subcommand("impedance", "equivalent impedance, passivity, stability");
    std::string variant = "delay", va = "conv", grid_spec;
    bool calibrate = false;
    impedance->add_option("--variant", variant, "ideal | closed | delay")->capture_default_str();
    impedance->add_option("--va", va, "conv | prop")->capture_default_str();
    impedance->add_option("--grid-spec", grid_spec, "grid override, e.g. scr=4,xr=4 or rg=...,lg=...");
    impedance->add_flag("--calibrate", calibrate, "sweep k_cc_p in [5,200] against 358/293 Hz");

    auto* simulate = app.add_subcommand("simulate", "run the mode-transition experiment");
    std::string schedule_flag, out_flag;
    simulate->add_option("--schedule", schedule_flag, "e.g. 0:proposed,0.4:conventional,0.5:proposed");
    simulate->add_option("--out", out_flag, "trace CSV path (default <out-dir>/trace.csv)");

    auto* scan = app.add_subcommand("scan", "injection-based impedance scan of the simulated loop");

    auto* fft = app.add_subcommand("fft", "amplitude spectrum of a recorded trace");
    std::string trace_path, channel = "i_a", window = "rectangular";
    double t0 = 0.0, t1 = 0.0;
    fft->add_option("trace", trace_path, "trace CSV from the simulate subcommand")->required();
    fft->add_option("--channel", channel, "i_a|i_b|i_c|i_alpha|i_beta|v_a|v_alpha|v_beta")
        ->capture_default_str();
    fft->add_option("--window", window, "rectangular | hann")->capture_default_str();
    fft->add_option("--t0", t0, "window start, s");
    fft->add_option("--t1", t1, "window end, s (default: end of trace)");

    CLI11_PARSE(app, argc, argv);

    try {
        gfmp::Config cfg = load_config(config_path);
        if (!grid_spec.empty()) apply_grid_spec(cfg, grid_spec);
        print_resolved(cfg);

        Manifest man;
        man.config_snapshot = gfmp::config_to_json(cfg);

        int rc = kExitOk;
        if (design->parsed()) {
            man.subcommand = "design";
            rc = cmd_design(cfg, out_dir, man);
        } else if (impedance->parsed()) {
            man.subcommand = "impedance";
            rc = cmd_impedance(cfg, out_dir, variant, va, calibrate, plot_script, man);
        } else if (simulate->parsed()) {
            man.subcommand = "simulate";
            rc = cmd_simulate(cfg, out_dir, schedule_flag, out_flag, plot_script, man);
        } else if (scan->parsed()) {
            man.subcommand = "scan";
            rc = cmd_scan(cfg, out_dir, plot_script, man);
        } else if (fft->parsed()) {
            man.subcommand = "fft";
            rc = cmd_fft(cfg, out_dir, trace_path, channel, window, t0, t1, plot_script, man);
        }
        if (rc == kExitOk) man.write(out_dir);
        return rc;
    } catch (const gfmp::PoleAtEvaluationPoint& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    } catch (const gfmp::NumericFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    } catch (const gfmp::GridTooCoarse& e) {
        std::fprintf(stderr, "error: %s\nhint: raise analysis_grid.points_per_decade\n", e.what());
        return kExitBadInput;
    } catch (const gfmp::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitBadInput;
    }
}
