#pragma once

// Equivalent output impedance of the VA-CC loop in its three forms, passivity
// scanning with bisection-refined band edges, and closed-loop assessment of
// the inverter-grid interconnection through the return ratio Z_g/Z_eq.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gfmp/models.hpp"
#include "gfmp/transfer.hpp"

namespace gfmp {

/// Z_eq(s) = 1/Y_v + s L_f / (G_cc Y_v) — delay-free loop, full PR controller.
inline TransferElement z_eq_ideal(const TransferElement& yv_elem, const ControllerParams& c,
                                  const PlantParams& p) {
    c.validate();
    p.validate();
    const TransferElement gcc = gcc_pr(c);
    const TransferElement s_lf = TransferElement::rational({0.0, p.l_f}, {1.0});
    return inverse(yv_elem) + s_lf / (gcc * yv_elem);
}

/// Proportional-gain closed form for the series R-L admittance:
/// Z_eq(s) = R_v + s L_v + s L_f (R_v + s L_v) / K_cc,p.
inline TransferElement z_eq_conv_closed_form(const VaParams& va, const ControllerParams& c,
                                             const PlantParams& p) {
    va.validate();
    c.validate();
    p.validate();
    const double k = c.k_cc_p;
    // (R_v) + (L_v + L_f R_v / k) s + (L_f L_v / k) s^2
    return TransferElement::rational(
        {va.r_v, va.l_v + p.l_f * va.r_v / k, p.l_f * va.l_v / k}, {1.0});
}

/// The negative-resistance contribution -(2 pi f)^2 L_f L_v / K_cc,p.
inline double negative_resistance_term(const VaParams& va, const ControllerParams& c,
                                       const PlantParams& p, double f_hz) {
    if (!(f_hz > 0.0)) throw InvalidRange("negative_resistance_term: f_hz must be > 0");
    const double w = 2.0 * std::numbers::pi * f_hz;
    return -(w * w) * p.l_f * va.l_v / c.k_cc_p;
}

/// Delay-aware equivalent impedance. The whole controller output (current
/// control and voltage feedforward alike) is delayed by T_d:
///
///   Z_eq(s) = [e^{-sT_d} G_cc + s L_f] / [1 - e^{-sT_d} + e^{-sT_d} G_cc Y_v]
///
/// Reduces exactly to z_eq_ideal at T_d = 0; small-signal consistent with the
/// sampled-data loop the simulator runs.
inline TransferElement z_eq_delay(const TransferElement& yv_elem, const ControllerParams& c,
                                  const PlantParams& p) {
    c.validate();
    p.validate();
    const TransferElement gcc = gcc_pr(c);
    const TransferElement s_lf = TransferElement::rational({0.0, p.l_f}, {1.0});
    const TransferElement one = TransferElement::constant(1.0);
    const TransferElement d = TransferElement::delay(c.t_d);
    const TransferElement num = d * gcc + s_lf;
    const TransferElement den = one - d + d * gcc * yv_elem;
    return num / den;
}

/// Grid-side impedance seen from the inverter terminal at the PCC: the
/// Thevenin R-L branch in parallel with the filter capacitor. With c_f = 0
/// this is the bare series branch.
inline TransferElement pcc_grid_impedance(const GridParams& g, const PlantParams& p) {
    g.validate();
    const TransferElement zg = TransferElement::rational({g.r_g, g.l_g}, {1.0});
    if (p.c_f <= 0.0) return zg;
    const TransferElement yc = TransferElement::rational({0.0, p.c_f}, {1.0}); // s C_f
    const TransferElement one = TransferElement::constant(1.0);
    return zg / (one + yc * zg);
}

/// Which analytic impedance form to build.
enum class ZeqVariant { ideal, conventional_closed_form, delay_aware };

struct ZeqModel {
    ZeqVariant variant = ZeqVariant::delay_aware;
    std::variant<VaParams, ProposedVaParams> va;
    ControllerParams controller;
    PlantParams plant;
};

inline TransferElement va_admittance(const std::variant<VaParams, ProposedVaParams>& va) {
    if (std::holds_alternative<VaParams>(va)) return yv_conv(std::get<VaParams>(va));
    return yv_prop(std::get<ProposedVaParams>(va));
}

inline TransferElement build_zeq(const ZeqModel& m) {
    switch (m.variant) {
    case ZeqVariant::ideal: return z_eq_ideal(va_admittance(m.va), m.controller, m.plant);
    case ZeqVariant::conventional_closed_form:
        if (!std::holds_alternative<VaParams>(m.va)) {
            throw InvalidRange("closed-form impedance requires the series R-L admittance");
        }
        return z_eq_conv_closed_form(std::get<VaParams>(m.va), m.controller, m.plant);
    case ZeqVariant::delay_aware: return z_eq_delay(va_admittance(m.va), m.controller, m.plant);
    }
    throw InvalidRange("build_zeq: unknown variant");
}

// ---------------------------------------------------------------------------
// Passivity scan
// ---------------------------------------------------------------------------

struct PassivityScanOptions {
    double guard_lo_hz = 55.0;  ///< fundamental guard band, excluded from band logic
    double guard_hi_hz = 65.0;
    double edge_tol_hz = 0.1;   ///< bisection tolerance for band edges
};

struct PassivityReport {
    FrequencyGrid grid;
    std::vector<double> re_zeq;                        ///< ohm, per grid point
    std::vector<std::pair<double, double>> non_passive_bands; ///< (f_lo, f_hi) Hz
    std::optional<double> first_violation_hz;
    double min_re = 0.0;
    double min_re_hz = 0.0;
};

namespace detail {

inline double bisect_re_zero(const TransferElement& zeq, double f_lo, double f_hi, double tol_hz) {
    double lo = f_lo, hi = f_hi;
    double re_lo = zeq.at_omega(2.0 * std::numbers::pi * lo).real();
    double mid = 0.5 * (lo + hi);
    // sharpen until the edge is tight in frequency and in residual real part
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double re_mid = zeq.at_omega(2.0 * std::numbers::pi * mid).real();
        if (hi - lo <= tol_hz && std::abs(re_mid) < 1e-4) break;
        if ((re_lo < 0.0) == (re_mid < 0.0)) {
            lo = mid;
            re_lo = re_mid;
        } else {
            hi = mid;
        }
    }
    return mid;
}

} // namespace detail

/// Pointwise Re{Z_eq(j w)} over the grid; maximal negative runs outside the
/// fundamental guard band become bands, with edges refined by bisection on
/// the analytic element. first_violation_hz is the lowest band start outside
/// the guard.
inline PassivityReport passivity_scan(const TransferElement& zeq, const FrequencyGrid& grid,
                                      const PassivityScanOptions& opt = {}) {
    const FrequencyResponse resp = frequency_response(zeq, grid);
    const std::size_t n = grid.size();
    std::vector<double> re(n);
    for (std::size_t k = 0; k < n; ++k) re[k] = resp.values[k].real();

    auto in_guard = [&](std::size_t k) {
        const double f = grid.hz(k);
        return f > opt.guard_lo_hz && f < opt.guard_hi_hz;
    };

    PassivityReport rep{grid, std::move(re), {}, std::nullopt};
    rep.min_re = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        if (in_guard(k)) continue;
        if (rep.re_zeq[k] < rep.min_re) {
            rep.min_re = rep.re_zeq[k];
            rep.min_re_hz = grid.hz(k);
        }
    }

    std::size_t k = 0;
    while (k < n) {
        if (in_guard(k) || rep.re_zeq[k] >= 0.0) {
            ++k;
            continue;
        }
        const std::size_t start = k;
        while (k + 1 < n && !in_guard(k + 1) && rep.re_zeq[k + 1] < 0.0) ++k;
        const std::size_t stop = k;

        double f_lo = grid.hz(start);
        if (start > 0 && !in_guard(start - 1)) {
            f_lo = detail::bisect_re_zero(zeq, grid.hz(start - 1), grid.hz(start), opt.edge_tol_hz);
        } else if (start > 0) {
            f_lo = opt.guard_hi_hz; // edge clamped at the guard boundary
        }
        double f_hi = grid.hz(stop);
        if (stop + 1 < n && !in_guard(stop + 1)) {
            f_hi = detail::bisect_re_zero(zeq, grid.hz(stop), grid.hz(stop + 1), opt.edge_tol_hz);
        } else if (stop + 1 < n) {
            f_hi = opt.guard_lo_hz;
        }
        rep.non_passive_bands.emplace_back(f_lo, f_hi);
        ++k;
    }

    if (!rep.non_passive_bands.empty()) {
        rep.first_violation_hz = rep.non_passive_bands.front().first;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Return-ratio stability assessment
// ---------------------------------------------------------------------------

enum class Verdict { stable, unstable, marginal };

struct StabilityAssessment {
    FrequencyResponse return_ratio;        ///< L(jw) = Z_g/Z_eq on the grid
    std::vector<double> gain_crossover_hz; ///< |L| = 1 crossings
    std::vector<double> phase_crossover_hz;///< unwrapped phase through odd 180 deg
    int encirclements_of_minus_one = 0;    ///< clockwise positive
    Verdict verdict = Verdict::stable;
    double min_dist_to_minus_one = 0.0;
};

struct StabilityOptions {
    double crossover_tol_hz = 0.5; ///< bisection tolerance for crossover frequencies
    double marginal_eps = 1e-6;    ///< locus distance to -1 below which verdict is marginal
    double max_phase_step_deg = 90.0;
};

namespace detail {

inline double bisect_mag_one(const TransferElement& ratio, double f_lo, double f_hi, double tol) {
    double lo = f_lo, hi = f_hi;
    double g_lo = std::abs(ratio.at_omega(2.0 * std::numbers::pi * lo)) - 1.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double g_mid = std::abs(ratio.at_omega(2.0 * std::numbers::pi * mid)) - 1.0;
        if ((g_lo < 0.0) == (g_mid < 0.0)) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Bisect the frequency where the locally-unwrapped phase crosses `target`
/// (degrees), starting from the unwrapped value at f_lo.
inline double bisect_phase_target(const TransferElement& ratio, double f_lo, double f_hi,
                                  double ph_lo_deg, double target_deg, double tol) {
    double lo = f_lo, hi = f_hi;
    double p_lo = ph_lo_deg;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        double p_mid =
            std::arg(ratio.at_omega(2.0 * std::numbers::pi * mid)) * 180.0 / std::numbers::pi;
        while (p_mid - p_lo > 180.0) p_mid -= 360.0;
        while (p_mid - p_lo < -180.0) p_mid += 360.0;
        if ((p_lo < target_deg) == (p_mid < target_deg)) {
            lo = mid;
            p_lo = p_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Evaluates L = Z_g/Z_eq over the grid, refines gain and phase crossovers by
/// bisection on the analytic elements, and counts encirclements of -1 from
/// signed negative-real-axis crossings beyond -1 (the conjugate branch closes
/// the locus). Instability <=> nonzero encirclements, assuming the ratio is
/// open-loop stable.
inline StabilityAssessment return_ratio_assessment(const TransferElement& zeq,
                                                   const TransferElement& zg,
                                                   const FrequencyGrid& grid,
                                                   const StabilityOptions& opt = {}) {
    const TransferElement ratio = zg / zeq;
    StabilityAssessment out{frequency_response(ratio, grid), {}, {}, 0, Verdict::stable, 0.0};
    const auto& vals = out.return_ratio.values;
    const std::size_t n = grid.size();

    std::vector<double> mag(n), ph(n);
    for (std::size_t k = 0; k < n; ++k) {
        mag[k] = std::abs(vals[k]);
        ph[k] = std::arg(vals[k]) * 180.0 / std::numbers::pi;
    }
    // unwrap
    for (std::size_t k = 1; k < n; ++k) {
        while (ph[k] - ph[k - 1] > 180.0) ph[k] -= 360.0;
        while (ph[k] - ph[k - 1] < -180.0) ph[k] += 360.0;
        if (std::abs(ph[k] - ph[k - 1]) >= opt.max_phase_step_deg) {
            throw GridTooCoarse("return ratio phase steps " + std::to_string(ph[k] - ph[k - 1]) +
                                " deg near " + std::to_string(grid.hz(k)) +
                                " Hz; densify the grid");
        }
    }

    out.min_dist_to_minus_one = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        out.min_dist_to_minus_one =
            std::min(out.min_dist_to_minus_one, std::abs(vals[k] + Complex{1.0, 0.0}));
    }

    int winding = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if ((mag[k] - 1.0) * (mag[k + 1] - 1.0) < 0.0) {
            out.gain_crossover_hz.push_back(
                detail::bisect_mag_one(ratio, grid.hz(k), grid.hz(k + 1), opt.crossover_tol_hz));
        }
        // odd multiples of 180 deg between ph[k] and ph[k+1]
        const double lo = std::min(ph[k], ph[k + 1]);
        const double hi = std::max(ph[k], ph[k + 1]);
        for (double m = std::ceil((lo / 180.0 - 1.0) / 2.0); 180.0 * (2.0 * m + 1.0) <= hi; ++m) {
            const double target = 180.0 * (2.0 * m + 1.0);
            if (target <= lo || target >= hi) continue;
            const double fx = detail::bisect_phase_target(ratio, grid.hz(k), grid.hz(k + 1), ph[k],
                                                          target, opt.crossover_tol_hz);
            out.phase_crossover_hz.push_back(fx);
            const double mag_at = std::abs(ratio.at_omega(2.0 * std::numbers::pi * fx));
            if (mag_at > 1.0) {
                // crossing the ray (-inf, -1); descending phase = clockwise
                winding += (ph[k + 1] < ph[k]) ? 1 : -1;
            }
        }
    }
    // the conjugate (negative-frequency) branch mirrors every crossing
    out.encirclements_of_minus_one = 2 * winding;

    if (out.min_dist_to_minus_one < opt.marginal_eps) {
        out.verdict = Verdict::marginal;
    } else {
        out.verdict = (winding != 0) ? Verdict::unstable : Verdict::stable;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Proportional-gain calibration against crossover targets
// ---------------------------------------------------------------------------

struct CrossoverTargets {
    double gain_hz = 358.0;
    double phase_hz = 293.0;
};

struct KccpSweepPoint {
    double k_cc_p = 0.0;
    double gain_crossover_hz = 0.0;  ///< 0 when absent
    double phase_crossover_hz = 0.0; ///< 0 when absent
};

struct KccpCalibration {
    double k_cc_p = 0.0;
    double gain_crossover_hz = 0.0;
    double phase_crossover_hz = 0.0;
    double gain_err_rel = 0.0;
    double phase_err_rel = 0.0;
    double joint_err_rel = 0.0;      ///< max of the two relative errors
    std::vector<KccpSweepPoint> sweep; ///< crossover sensitivity over the gain range
};

/// Sweep K_cc,p over [k_lo, k_hi] (log-spaced), keeping K_cc,r on the default
/// tuning rule, and report the gain/phase crossovers of Z_g/Z_eq closest to
/// the targets for the best joint fit.
inline KccpCalibration calibrate_kccp(const TransferElement& yv, ControllerParams c,
                                      const PlantParams& plant, const TransferElement& zg,
                                      double k_lo, double k_hi,
                                      const CrossoverTargets& tgt = {}, int steps = 60,
                                      const FrequencyGrid* grid = nullptr) {
    FrequencyGrid g = grid ? *grid : log_grid(30.0, 5000.0, 400);
    std::optional<KccpCalibration> best;
    std::vector<KccpSweepPoint> sweep;
    for (int i = 0; i <= steps; ++i) {
        const double k = k_lo * std::pow(k_hi / k_lo, static_cast<double>(i) / steps);
        c.k_cc_p = k;
        c.k_cc_r = 2.0 * k * c.omega_cc / 10.0;
        const TransferElement zeq = z_eq_delay(yv, c, plant);
        std::optional<StabilityAssessment> sa;
        try {
            sa = return_ratio_assessment(zeq, zg, g);
        } catch (const GridTooCoarse&) {
            continue;
        }
        KccpSweepPoint pt;
        pt.k_cc_p = k;
        if (!sa->gain_crossover_hz.empty()) {
            pt.gain_crossover_hz = *std::min_element(
                sa->gain_crossover_hz.begin(), sa->gain_crossover_hz.end(),
                [&](double a, double b) {
                    return std::abs(a - tgt.gain_hz) < std::abs(b - tgt.gain_hz);
                });
        }
        if (!sa->phase_crossover_hz.empty()) {
            pt.phase_crossover_hz = *std::min_element(
                sa->phase_crossover_hz.begin(), sa->phase_crossover_hz.end(),
                [&](double a, double b) {
                    return std::abs(a - tgt.phase_hz) < std::abs(b - tgt.phase_hz);
                });
        }
        sweep.push_back(pt);
        if (sa->gain_crossover_hz.empty() || sa->phase_crossover_hz.empty()) continue;
        KccpCalibration cand;
        cand.k_cc_p = k;
        cand.gain_crossover_hz = *std::min_element(
            sa->gain_crossover_hz.begin(), sa->gain_crossover_hz.end(),
            [&](double a, double b) { return std::abs(a - tgt.gain_hz) < std::abs(b - tgt.gain_hz); });
        cand.phase_crossover_hz = *std::min_element(
            sa->phase_crossover_hz.begin(), sa->phase_crossover_hz.end(), [&](double a, double b) {
                return std::abs(a - tgt.phase_hz) < std::abs(b - tgt.phase_hz);
            });
        cand.gain_err_rel = std::abs(cand.gain_crossover_hz - tgt.gain_hz) / tgt.gain_hz;
        cand.phase_err_rel = std::abs(cand.phase_crossover_hz - tgt.phase_hz) / tgt.phase_hz;
        cand.joint_err_rel = std::max(cand.gain_err_rel, cand.phase_err_rel);
        if (!best || cand.joint_err_rel < best->joint_err_rel) best = cand;
    }
    if (!best) {
        throw NumericFailure("calibrate_kccp: no gain in range produced both crossovers");
    }
    best->sweep = std::move(sweep);
    return *best;
}

} // namespace gfmp
