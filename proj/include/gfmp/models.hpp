#pragma once

// Component models for the VA-CC grid-forming loop: conventional and
// parallel-resistor virtual admittances, the PR current controller, and the
// Thevenin grid, plus the parameter synthesis that places the proposed
// admittance on the conventional design point at the fundamental frequency.

#include <cmath>
#include <numbers>
#include <utility>

#include "gfmp/errors.hpp"
#include "gfmp/transfer.hpp"

namespace gfmp {

/// Conventional series R-L virtual admittance parameters.
struct VaParams {
    double r_v = 0.0; ///< virtual resistance, ohm
    double l_v = 0.0; ///< virtual inductance, H

    void validate() const {
        if (!(r_v > 0.0) || !(l_v > 0.0)) throw InvalidRange("VaParams: r_v and l_v must be > 0");
    }
};

/// Proposed admittance: series R_vsigma plus (R_vpi parallel L_v0).
struct ProposedVaParams {
    double r_v_sigma = 0.0; ///< series virtual resistance, ohm
    double r_v_pi = 0.0;    ///< parallel virtual resistance, ohm
    double l_v0 = 0.0;      ///< virtual inductance, H

    void validate() const {
        if (!(r_v_sigma >= 0.0) || !(r_v_pi > 0.0) || !(l_v0 > 0.0)) {
            throw InvalidRange("ProposedVaParams: need r_v_sigma >= 0, r_v_pi > 0, l_v0 > 0");
        }
    }
};

/// Current-controller and timing parameters.
struct ControllerParams {
    double k_cc_p = 0.0;   ///< proportional gain, V/A
    double k_cc_r = 0.0;   ///< resonant gain
    double omega_1 = 0.0;  ///< fundamental, rad/s
    double omega_cc = 0.0; ///< CC design bandwidth, rad/s
    double t_d = 0.0;      ///< control delay, s (1.5/f_s when delay modeling is on)
    double f_s = 0.0;      ///< sampling frequency, Hz

    void validate() const {
        if (!(k_cc_p > 0.0)) throw InvalidRange("ControllerParams: k_cc_p must be > 0");
        if (!(omega_1 > 0.0)) throw InvalidRange("ControllerParams: omega_1 must be > 0");
        if (!(t_d >= 0.0)) throw InvalidRange("ControllerParams: t_d must be >= 0");
        if (!(f_s > 0.0)) throw InvalidRange("ControllerParams: f_s must be > 0");
    }

    ControllerParams without_delay() const {
        ControllerParams c = *this;
        c.t_d = 0.0;
        return c;
    }
};

/// Output filter constants. v_dc is only used as a command saturation bound.
struct PlantParams {
    double l_f = 0.0;  ///< filter inductance, H
    double c_f = 0.0;  ///< filter capacitance (Y-equivalent), F
    double v_dc = 0.0; ///< DC-link voltage, V; <= 0 disables saturation

    void validate() const {
        if (!(l_f > 0.0)) throw InvalidRange("PlantParams: l_f must be > 0");
        if (!(c_f >= 0.0)) throw InvalidRange("PlantParams: c_f must be >= 0");
    }
};

/// Thevenin grid: series R-L sized from SCR and X/R at the rated power.
struct GridParams {
    double r_g = 0.0;        ///< ohm (filled by zg_from_scr)
    double l_g = 0.0;        ///< H   (filled by zg_from_scr)
    double v_g_ll_rms = 0.0; ///< line-to-line RMS grid voltage, V
    double scr = 0.0;        ///< short-circuit ratio
    double xr_ratio = 0.0;   ///< grid X/R ratio
    double p_rated = 0.0;    ///< rated power, W

    void validate() const {
        if (!(r_g >= 0.0) || !(l_g >= 0.0)) throw InvalidRange("GridParams: r_g, l_g must be >= 0");
        if (!(scr > 0.0) || !(xr_ratio > 0.0)) throw InvalidRange("GridParams: scr and xr_ratio must be > 0");
    }
};

/// Fundamental-frequency design point for the proposed admittance synthesis.
struct DesignPoint {
    double r_v = 0.0;       ///< target virtual resistance at omega_1, ohm
    double x_v = 0.0;       ///< target virtual reactance at omega_1, ohm
    double omega_1 = 0.0;   ///< rad/s
    double r_v_sigma = 0.0; ///< chosen series split, 0 <= r_v_sigma < r_v

    void validate() const {
        if (!(x_v > 0.0)) throw InvalidRange("DesignPoint: x_v must be > 0");
        if (!(omega_1 > 0.0)) throw InvalidRange("DesignPoint: omega_1 must be > 0");
        if (!(r_v_sigma >= 0.0) || !(r_v_sigma < r_v)) {
            throw InvalidRange("DesignPoint: require 0 <= r_v_sigma < r_v");
        }
    }
};

/// Y_v,conv(s) = 1 / (R_v + s L_v)
inline TransferElement yv_conv(const VaParams& p) {
    p.validate();
    return TransferElement::rational({1.0}, {p.r_v, p.l_v});
}

/// Y_v,prop(s) = 1 / (R_vsigma + s R_vpi L_v0 / (R_vpi + s L_v0))
inline TransferElement yv_prop(const ProposedVaParams& p) {
    p.validate();
    // expanded: (R_vpi + s L_v0) / (R_vsigma R_vpi + s L_v0 (R_vsigma + R_vpi))
    return TransferElement::rational({p.r_v_pi, p.l_v0},
                                     {p.r_v_sigma * p.r_v_pi, p.l_v0 * (p.r_v_sigma + p.r_v_pi)});
}

/// Series virtual impedance 1/Y_v as an explicit element (for Bode output).
inline TransferElement zv_conv(const VaParams& p) {
    p.validate();
    return TransferElement::rational({p.r_v, p.l_v}, {1.0});
}

inline TransferElement zv_prop(const ProposedVaParams& p) {
    p.validate();
    return TransferElement::rational({p.r_v_sigma * p.r_v_pi, p.l_v0 * (p.r_v_sigma + p.r_v_pi)},
                                     {p.r_v_pi, p.l_v0});
}

/// Place the parallel-resistor admittance on the conventional design point:
/// the returned parameters reproduce R_v + j X_v exactly at omega_1.
inline ProposedVaParams design_proposed_va(const DesignPoint& d) {
    d.validate();
    const double dr = d.r_v - d.r_v_sigma;
    if (dr <= 0.0 || d.x_v == 0.0) {
        throw DegenerateDesign("design_proposed_va: r_v_sigma must be < r_v and x_v nonzero");
    }
    const double q = d.x_v * d.x_v + dr * dr;
    ProposedVaParams p;
    p.r_v_sigma = d.r_v_sigma;
    p.l_v0 = q / (d.omega_1 * d.x_v);
    p.r_v_pi = q / dr;
    p.validate();
    return p;
}

/// PR current controller G_cc(s) = K_p + K_r s / (s^2 + omega_1^2).
inline TransferElement gcc_pr(const ControllerParams& c) {
    c.validate();
    TransferElement prop = TransferElement::constant(c.k_cc_p);
    if (c.k_cc_r == 0.0) return prop;
    TransferElement resonant =
        TransferElement::rational({0.0, c.k_cc_r}, {c.omega_1 * c.omega_1, 0.0, 1.0});
    return prop + resonant;
}

/// Fill r_g and l_g from SCR / X/R at omega_1 and return the series element.
/// |Z_g| = V_g^2 / (SCR * P_rated), split by the X/R ratio.
inline std::pair<GridParams, TransferElement> zg_from_scr(GridParams g, double omega_1) {
    if (!(g.scr > 0.0) || !(g.xr_ratio > 0.0) || !(g.v_g_ll_rms > 0.0) || !(g.p_rated > 0.0)) {
        throw InvalidRange("zg_from_scr: scr, xr_ratio, v_g_ll_rms, p_rated must be > 0");
    }
    if (!(omega_1 > 0.0)) throw InvalidRange("zg_from_scr: omega_1 must be > 0");
    const double zmag = g.v_g_ll_rms * g.v_g_ll_rms / (g.scr * g.p_rated);
    g.r_g = zmag / std::sqrt(1.0 + g.xr_ratio * g.xr_ratio);
    g.l_g = g.xr_ratio * g.r_g / omega_1;
    return {g, TransferElement::rational({g.r_g, g.l_g}, {1.0})};
}

/// High-frequency resistive asymptote of the proposed admittance.
inline double harmonic_asymptote(const ProposedVaParams& p) {
    p.validate();
    return p.r_v_sigma + p.r_v_pi;
}

// ---------------------------------------------------------------------------
// Reference operating point (bench defaults). All values are overridable via
// the CLI configuration file; the gains below follow the bandwidth-based
// tuning K_cc,p = omega_cc * L_f with K_cc,r = 2 K_cc,p omega_cc / 10.
// ---------------------------------------------------------------------------

namespace defaults {

inline constexpr double p_rated_w = 3000.0;
inline constexpr double f1_hz = 60.0;
inline constexpr double f_sw_hz = 10e3;
inline constexpr double f_s_hz = 20e3;
inline constexpr double v_g_ll_rms = 220.0;
inline constexpr double scr = 4.0;
inline constexpr double xr_ratio = 4.0;
inline constexpr double v_dc = 400.0;
inline constexpr double l_f = 3.4e-3;
inline constexpr double c_f = 30e-6;
inline constexpr double f_cc_hz = 500.0;
inline constexpr double l_v = 10e-3;
inline constexpr double r_v = 0.754;
inline constexpr double r_v_sigma = r_v / 4.0; // reproduces the 25.698-ohm parallel resistor

inline double omega_1() { return 2.0 * std::numbers::pi * f1_hz; }
inline double omega_cc() { return 2.0 * std::numbers::pi * f_cc_hz; }

inline PlantParams plant() { return PlantParams{l_f, c_f, v_dc}; }

inline GridParams grid() {
    GridParams g;
    g.v_g_ll_rms = v_g_ll_rms;
    g.scr = scr;
    g.xr_ratio = xr_ratio;
    g.p_rated = p_rated_w;
    return zg_from_scr(g, omega_1()).first;
}

inline ControllerParams controller(bool with_delay = true) {
    ControllerParams c;
    c.omega_1 = omega_1();
    c.omega_cc = omega_cc();
    c.f_s = f_s_hz;
    c.k_cc_p = c.omega_cc * l_f;
    c.k_cc_r = 2.0 * c.k_cc_p * c.omega_cc / 10.0;
    c.t_d = with_delay ? 1.5 / c.f_s : 0.0;
    return c;
}

inline VaParams va_conventional() { return VaParams{r_v, l_v}; }

inline DesignPoint design_point() {
    DesignPoint d;
    d.r_v = r_v;
    d.x_v = omega_1() * l_v;
    d.omega_1 = omega_1();
    d.r_v_sigma = r_v_sigma;
    return d;
}

inline ProposedVaParams va_proposed() { return design_proposed_va(design_point()); }

} // namespace defaults

} // namespace gfmp
