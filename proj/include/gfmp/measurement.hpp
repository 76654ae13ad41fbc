#pragma once

// Perturbation-injection frequency scanning of the simulated inverter and
// response comparison utilities. Each scan point runs a perturbed and an
// unperturbed simulation with identical configuration; differencing removes
// the fundamental operating point exactly, and a single-bin DFT over an
// integer number of injection cycles extracts the small-signal impedance
// -dV_pcc/dI at the injected frequency.

#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <future>
#include <numbers>
#include <optional>
#include <thread>
#include <vector>

#include "gfmp/impedance.hpp"
#include "gfmp/simulator.hpp"

namespace gfmp {

struct ScanConfig {
    std::vector<double> frequencies_hz;
    double injection_amplitude_v = 0.0; ///< <= 0: default 0.5% of nominal peak EMF
    int settle_cycles = 5;              ///< injection periods discarded
    int measure_cycles = 10;            ///< injection periods averaged
    double warmup_s = 0.3;              ///< operating-point settling before injection
    double min_settle_s = 0.1;          ///< floor on the discarded interval (loop ring-down)
    double fundamental_guard_hz = 5.0;  ///< rejected neighborhood around f1
    double growth_limit = 0.05;         ///< cycle-over-cycle growth that flags instability

    void validate(double f1_hz) const {
        for (double f : frequencies_hz) {
            if (!(f > 0.0)) throw InvalidRange("scan: frequencies must be > 0");
            if (std::abs(f - f1_hz) < fundamental_guard_hz) {
                throw InvalidRange("scan: frequency " + std::to_string(f) +
                                   " Hz lies within the fundamental guard band");
            }
        }
        if (settle_cycles < 0 || measure_cycles < 1) {
            throw InvalidRange("scan: need settle_cycles >= 0, measure_cycles >= 1");
        }
    }
};

enum class ScanPointStatus { ok, unstable };

struct ScanRecord {
    double f_hz = 0.0;
    Complex z_measured{};
    Complex z_analytic{};
    double mag_err_pct = 0.0;
    double phase_err_deg = 0.0;
    ScanPointStatus status = ScanPointStatus::ok;
};

struct ScanResult {
    std::vector<ScanRecord> records;
    double max_mag_err_pct = 0.0;
    double max_phase_err_deg = 0.0;
};

namespace detail {

inline ScanRecord scan_one(double f, const ScanConfig& scan, const SimConfig& base_cfg,
                           const TransferElement& z_analytic) {
    const double amp = scan.injection_amplitude_v > 0.0
                           ? scan.injection_amplitude_v
                           : 0.005 * base_cfg.nominal_emf_peak();
    const double cycle = 1.0 / f;
    const double ts = 1.0 / base_cfg.controller.f_s;
    const auto cycle_samples = static_cast<std::size_t>(std::llround(cycle / ts));
    // settle an integer number of cycles, at least min_settle_s of ring-down
    const int settle = std::max(scan.settle_cycles,
                                static_cast<int>(std::ceil(scan.min_settle_s * f)));

    const std::size_t n0 =
        static_cast<std::size_t>(std::llround((scan.warmup_s + settle * cycle) / ts));
    const std::size_t n1 = n0 + static_cast<std::size_t>(scan.measure_cycles) * cycle_samples;

    SimConfig cfg = base_cfg;
    cfg.t_end = static_cast<double>(n1 + 2) * ts;
    cfg.injection = InjectionSpec{};
    const SimTrace base = run(cfg);
    cfg.injection = InjectionSpec{f, amp, scan.warmup_s};
    const SimTrace pert = run(cfg);

    ScanRecord rec;
    rec.f_hz = f;
    if (base.diverged || pert.diverged || n1 > base.records.size() || n1 > pert.records.size()) {
        rec.status = ScanPointStatus::unstable;
        return rec;
    }

    // per-cycle RMS growth check on the differential current
    double prev_rms = -1.0;
    for (int c = 0; c < scan.measure_cycles; ++c) {
        double acc = 0.0;
        for (std::size_t j = n0 + c * cycle_samples; j < n0 + (c + 1) * cycle_samples; ++j) {
            acc += std::norm(pert.records[j].i - base.records[j].i);
        }
        const double rms = std::sqrt(acc / static_cast<double>(cycle_samples));
        if (prev_rms > 0.0 && rms > (1.0 + scan.growth_limit) * prev_rms) {
            rec.status = ScanPointStatus::unstable;
            return rec;
        }
        prev_rms = rms;
    }

    Complex dv{}, di{};
    const double w = 2.0 * std::numbers::pi * f;
    for (std::size_t j = n0; j < n1; ++j) {
        const Complex rot = std::polar(1.0, -w * base.records[j].t);
        dv += (pert.records[j].v_pcc - base.records[j].v_pcc) * rot;
        di += (pert.records[j].i - base.records[j].i) * rot;
    }
    rec.z_measured = -dv / di;
    rec.z_analytic = z_analytic.at_omega(w);
    rec.mag_err_pct = (std::abs(rec.z_measured) / std::abs(rec.z_analytic) - 1.0) * 100.0;
    rec.phase_err_deg =
        std::arg(rec.z_measured / rec.z_analytic) * 180.0 / std::numbers::pi;
    return rec;
}

} // namespace detail

/// Scan the simulated inverter at each requested frequency and pair the
/// measurement with the analytic delay-aware impedance. Scan points are
/// independent simulation pairs and run on up to `threads` workers.
inline ScanResult frequency_scan(const ScanConfig& scan, const SimConfig& sim,
                                 const TransferElement& z_analytic, unsigned threads = 1) {
    sim.validate();
    scan.validate(sim.controller.omega_1 / (2.0 * std::numbers::pi));
    ScanResult out;
    out.records.resize(scan.frequencies_hz.size());

    const unsigned n_workers =
        std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(scan.frequencies_hz.size())));
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < scan.frequencies_hz.size(); ++i) {
            out.records[i] = detail::scan_one(scan.frequencies_hz[i], scan, sim, z_analytic);
        }
    } else {
        std::vector<std::future<void>> pool;
        std::atomic<std::size_t> next{0};
        pool.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) {
            pool.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next.fetch_add(1); i < scan.frequencies_hz.size();
                     i = next.fetch_add(1)) {
                    out.records[i] = detail::scan_one(scan.frequencies_hz[i], scan, sim, z_analytic);
                }
            }));
        }
        for (auto& f : pool) f.get();
    }

    for (const auto& r : out.records) {
        if (r.status != ScanPointStatus::ok) continue;
        out.max_mag_err_pct = std::max(out.max_mag_err_pct, std::abs(r.mag_err_pct));
        out.max_phase_err_deg = std::max(out.max_phase_err_deg, std::abs(r.phase_err_deg));
    }
    return out;
}

struct ResponseComparison {
    double max_mag_err_pct = 0.0;
    double max_phase_err_deg = 0.0;
    double worst_f_hz = 0.0;
};

/// Pointwise relative magnitude and absolute phase error between two
/// responses on the same grid; reports the worst point by magnitude error.
inline ResponseComparison compare_responses(const FrequencyResponse& a,
                                            const FrequencyResponse& b) {
    if (!(a.grid == b.grid)) throw GridMismatch("compare_responses: responses use different grids");
    ResponseComparison out;
    out.worst_f_hz = a.grid.hz(0);
    for (std::size_t k = 0; k < a.grid.size(); ++k) {
        const double mag_err = std::abs(std::abs(b.values[k]) / std::abs(a.values[k]) - 1.0) * 100.0;
        const double ph_err =
            std::abs(std::arg(b.values[k] / a.values[k])) * 180.0 / std::numbers::pi;
        if (mag_err > out.max_mag_err_pct) {
            out.max_mag_err_pct = mag_err;
            out.worst_f_hz = a.grid.hz(k);
        }
        out.max_phase_err_deg = std::max(out.max_phase_err_deg, ph_err);
    }
    return out;
}

} // namespace gfmp
