#pragma once

// Sampled-data simulation of the grid-forming loop: droop outer loops driving
// an internal voltage source, a switchable virtual admittance generating the
// current reference, PR current control with voltage feedforward and a
// one-sample computation delay, and the continuous LC + grid network advanced
// by exact zero-order-hold integration between control instants.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "gfmp/discrete.hpp"
#include "gfmp/models.hpp"
#include "gfmp/state_space.hpp"

namespace gfmp {

enum class VaMode { conventional, proposed };

inline const char* to_string(VaMode m) {
    return m == VaMode::conventional ? "conventional" : "proposed";
}

/// Droop gains and filter cutoffs in per-unit, with their conversion bases.
struct DroopParams {
    double k_p_pu = 0.1;
    double k_q_pu = 0.1;
    double omega_p_pu = 0.1;
    double omega_q_pu = 0.1;
    double s_base = 0.0;     ///< VA
    double v_base = 0.0;     ///< line-to-line RMS, V
    double omega_base = 0.0; ///< rad/s

    void validate() const {
        if (!(k_p_pu >= 0.0) || !(k_q_pu >= 0.0)) throw InvalidRange("DroopParams: gains must be >= 0");
        if (!(omega_p_pu > 0.0) || !(omega_q_pu > 0.0)) throw InvalidRange("DroopParams: cutoffs must be > 0");
        if (!(s_base > 0.0) || !(v_base > 0.0) || !(omega_base > 0.0)) {
            throw InvalidRange("DroopParams: bases must be > 0");
        }
    }

    double kp_si() const { return k_p_pu * omega_base / s_base; } ///< rad/s per W
    double kq_si() const { return k_q_pu * v_base / s_base; }     ///< V per var
};

struct ScheduleEntry {
    double t_start = 0.0;
    VaMode mode = VaMode::proposed;
};

/// Series perturbation EMF in the grid branch, used by the frequency scanner.
struct InjectionSpec {
    double f_hz = 0.0;
    double amplitude_v = 0.0;
    double t_start_s = 0.0;

    bool active() const { return amplitude_v > 0.0 && f_hz > 0.0; }
};

struct SimConfig {
    PlantParams plant;
    GridParams grid;
    ControllerParams controller;
    DroopParams droop;
    VaParams va_conventional;
    ProposedVaParams va_proposed;
    std::vector<ScheduleEntry> va_schedule{{0.0, VaMode::proposed}};
    double p_ref = 0.0;       ///< W
    double q_ref = 0.0;       ///< var
    double t_end = 1.0;       ///< s
    int plant_substeps = 10;  ///< per control period
    bool saturation_enabled = true;
    double dither_v = 0.0;    ///< uniform dither amplitude on the command, V
    std::uint64_t seed = 0;
    double current_limit_multiple = 50.0; ///< divergence threshold, x rated peak
    InjectionSpec injection;

    void validate() const {
        plant.validate();
        grid.validate();
        controller.validate();
        droop.validate();
        va_conventional.validate();
        va_proposed.validate();
        if (va_schedule.empty() || va_schedule.front().t_start != 0.0) {
            throw InvalidRange("SimConfig: schedule must start at t = 0");
        }
        for (std::size_t i = 1; i < va_schedule.size(); ++i) {
            if (va_schedule[i].t_start <= va_schedule[i - 1].t_start) {
                throw InvalidRange("SimConfig: schedule times must ascend");
            }
        }
        if (plant_substeps < 10) throw InvalidRange("SimConfig: plant_substeps must be >= 10");
        if (!(t_end > 0.0)) throw InvalidRange("SimConfig: t_end must be > 0");
        if (!(grid.l_g > 0.0)) throw InvalidRange("SimConfig: simulation requires l_g > 0");
    }

    double rated_peak_current() const {
        return std::numbers::sqrt2 * grid.p_rated / (std::sqrt(3.0) * grid.v_g_ll_rms);
    }

    /// Nominal phase-peak EMF in the amplitude-invariant frame.
    double nominal_emf_peak() const { return std::sqrt(2.0 / 3.0) * grid.v_g_ll_rms; }
};

/// Continuous network state in the stationary frame (complex alpha-beta).
struct PlantState {
    Complex i_f{}; ///< filter inductor current, A
    Complex v_c{}; ///< capacitor / PCC voltage, V
    Complex i_g{}; ///< grid branch current, A
};

/// Exact ZOH step of the 3-state LC + grid R-L network over a fixed dt.
/// Inputs (v_o, grid EMF incl. any injection) are held over the step.
class PlantDiscretizer {
    CMatrix<3> ad_;
    std::array<std::array<Complex, 2>, 3> bd_{};
    bool degenerate_ = false; // c_f == 0: single series branch
    double l_f_ = 0.0, l_tot_ = 0.0, r_g_ = 0.0;
    double a1_ = 0.0;
    Complex b1v_{}, b1e_{};

public:
    PlantDiscretizer(const PlantParams& p, const GridParams& g, double dt) {
        p.validate();
        g.validate();
        if (!(dt > 0.0)) throw InvalidRange("PlantDiscretizer: dt must be > 0");
        l_f_ = p.l_f;
        r_g_ = g.r_g;
        if (p.c_f <= 0.0) {
            degenerate_ = true;
            l_tot_ = p.l_f + g.l_g;
            // di/dt = (v_o - e - R_g i)/L_tot, exact first-order ZOH
            const double a = -g.r_g / l_tot_;
            a1_ = std::exp(a * dt);
            const double gain = (g.r_g > 0.0) ? (1.0 - a1_) / g.r_g : dt / l_tot_;
            b1v_ = gain;
            b1e_ = -gain;
            return;
        }
        if (!(g.l_g > 0.0)) {
            throw InvalidRange("PlantDiscretizer: l_g must be > 0 when c_f > 0");
        }
        CMatrix<5> m; // [A B; 0 0] * dt
        m(0, 1) = -dt / p.l_f;
        m(1, 0) = dt / p.c_f;
        m(1, 2) = -dt / p.c_f;
        m(2, 1) = dt / g.l_g;
        m(2, 2) = -g.r_g / g.l_g * dt;
        m(0, 3) = dt / p.l_f;
        m(2, 4) = -dt / g.l_g;
        zoh_discretize<3, 2>(m, ad_, bd_);
    }

    PlantState step(const PlantState& x, Complex v_o, Complex grid_emf) const {
        if (degenerate_) {
            PlantState out;
            out.i_f = a1_ * x.i_f + b1v_ * v_o + b1e_ * grid_emf;
            out.i_g = out.i_f;
            // algebraic PCC voltage from the inductor divider at the step end
            const Complex didt = (v_o - grid_emf - r_g_ * out.i_f) / l_tot_;
            out.v_c = v_o - l_f_ * didt;
            return out;
        }
        PlantState out;
        out.i_f = ad_(0, 0) * x.i_f + ad_(0, 1) * x.v_c + ad_(0, 2) * x.i_g + bd_[0][0] * v_o +
                  bd_[0][1] * grid_emf;
        out.v_c = ad_(1, 0) * x.i_f + ad_(1, 1) * x.v_c + ad_(1, 2) * x.i_g + bd_[1][0] * v_o +
                  bd_[1][1] * grid_emf;
        out.i_g = ad_(2, 0) * x.i_f + ad_(2, 1) * x.v_c + ad_(2, 2) * x.i_g + bd_[2][0] * v_o +
                  bd_[2][1] * grid_emf;
        return out;
    }
};

/// One exact ZOH step as a pure function (builds the discretizer internally;
/// use PlantDiscretizer directly inside loops).
inline PlantState plant_step(const PlantState& state, Complex v_o, Complex grid_emf, double dt,
                             const PlantParams& p, const GridParams& g) {
    return PlantDiscretizer(p, g, dt).step(state, v_o, grid_emf);
}

struct ControlRefs {
    double p_ref = 0.0;
    double q_ref = 0.0;
};

/// Discrete controller state: IVS, admittance filter, PR states, delay slot.
struct ControllerState {
    double ivs_phase = 0.0;
    double ivs_magnitude = 0.0;
    VaMode va_mode = VaMode::proposed;
    FirstOrderFilter va;
    Resonator pr;
    Complex delay_slot{};
    LowPass p_lpf, q_lpf;
    double p_meas = 0.0, q_meas = 0.0;
    Complex last_i_ref{};
    Complex last_e{};
};

/// Everything the per-sample control law needs, precomputed.
struct ControlLaw {
    double sample_time = 0.0;
    double k_cc_p = 0.0, k_cc_r = 0.0;
    double omega_1 = 0.0;
    double e_nominal = 0.0;
    double kp_si = 0.0, kq_si = 0.0;
    double v_sat = 0.0; ///< <= 0 disables saturation
    FirstOrderFilter va_conv_proto, va_prop_proto;
    Resonator pr_proto;
    LowPass p_lpf_proto, q_lpf_proto;

    ControlLaw() = default;
    ControlLaw(const SimConfig& cfg) {
        const auto& c = cfg.controller;
        sample_time = 1.0 / c.f_s;
        k_cc_p = c.k_cc_p;
        k_cc_r = c.k_cc_r;
        omega_1 = c.omega_1;
        e_nominal = cfg.nominal_emf_peak();
        kp_si = cfg.droop.kp_si();
        kq_si = cfg.droop.kq_si();
        v_sat = cfg.saturation_enabled && cfg.plant.v_dc > 0.0
                    ? cfg.plant.v_dc / std::sqrt(3.0)
                    : 0.0;
        const auto& vc = cfg.va_conventional;
        va_conv_proto = FirstOrderFilter(0.0, 1.0, vc.l_v, vc.r_v,
                                         bilinear_k(sample_time));
        const auto& vp = cfg.va_proposed;
        va_prop_proto = FirstOrderFilter(vp.l_v0, vp.r_v_pi, vp.l_v0 * (vp.r_v_sigma + vp.r_v_pi),
                                         vp.r_v_sigma * vp.r_v_pi,
                                         bilinear_k(sample_time, c.omega_1));
        pr_proto = Resonator(c.omega_1, sample_time);
        p_lpf_proto = LowPass(cfg.droop.omega_p_pu * cfg.droop.omega_base, sample_time);
        q_lpf_proto = LowPass(cfg.droop.omega_q_pu * cfg.droop.omega_base, sample_time);
    }

    const FirstOrderFilter& va_proto(VaMode m) const {
        return m == VaMode::conventional ? va_conv_proto : va_prop_proto;
    }
};

/// Droop update: low-pass filtered power errors steer the IVS frequency and
/// magnitude; the phase integrates at the sample rate. Returns the IVS vector
/// used for this sample (phase integrates afterwards).
inline Complex droop_update(ControllerState& st, double p_meas, double q_meas,
                            const ControlRefs& refs, const ControlLaw& law) {
    const double w_ivs = law.omega_1 + law.kp_si * st.p_lpf.step(refs.p_ref - p_meas);
    st.ivs_magnitude = law.e_nominal + law.kq_si * st.q_lpf.step(refs.q_ref - q_meas);
    const Complex e = std::polar(st.ivs_magnitude, st.ivs_phase);
    st.ivs_phase += w_ivs * law.sample_time;
    return e;
}

/// One control period: droop, admittance reference, PR + feedforward, command
/// saturation, one-sample delay. Returns the voltage command the plant applies
/// during this period (the delayed one).
inline Complex control_step(ControllerState& st, Complex v_pcc, Complex i, const ControlRefs& refs,
                            const ControlLaw& law) {
    st.p_meas = 1.5 * (v_pcc * std::conj(i)).real();
    st.q_meas = 1.5 * (v_pcc * std::conj(i)).imag();
    const Complex e = droop_update(st, st.p_meas, st.q_meas, refs, law);
    st.last_e = e;
    const Complex i_ref = st.va.step(e - v_pcc);
    st.last_i_ref = i_ref;
    const Complex err = i_ref - i;
    Complex v_cmd = law.k_cc_p * err + law.k_cc_r * st.pr.step(err) + v_pcc;
    if (law.v_sat > 0.0 && std::abs(v_cmd) > law.v_sat) {
        v_cmd *= law.v_sat / std::abs(v_cmd);
    }
    const Complex applied = st.delay_slot;
    st.delay_slot = v_cmd;
    return applied;
}

struct TraceRecord {
    double t = 0.0;
    Complex e, v_pcc, i, i_ref, v_cmd;
    double p = 0.0, q = 0.0;
    VaMode va_mode = VaMode::proposed;
};

struct SimTrace {
    std::vector<TraceRecord> records;
    double sample_time = 0.0;
    bool diverged = false;
    double divergence_time = 0.0;
};

/// Fundamental-frequency phasor operating point used to start the run on the
/// steady orbit: IVS aligned with the grid EMF, network solved with the
/// designed virtual impedance in place of the closed current loop.
struct SteadyPhasors {
    Complex v_pcc, i_f, i_g, e_ivs, e_grid;
};

inline SteadyPhasors steady_phasors(const SimConfig& cfg) {
    const double e0 = cfg.nominal_emf_peak();
    const double w1 = cfg.controller.omega_1;
    const Complex zv{cfg.va_conventional.r_v, w1 * cfg.va_conventional.l_v};
    const Complex zg{cfg.grid.r_g, w1 * cfg.grid.l_g};
    const Complex e{e0, 0.0};
    const Complex yc{0.0, w1 * cfg.plant.c_f};
    const Complex v = (e / zv + e / zg) / (1.0 / zv + yc + 1.0 / zg);
    SteadyPhasors s;
    s.e_ivs = e;
    s.e_grid = e;
    s.v_pcc = v;
    s.i_f = (e - v) / zv;
    s.i_g = (v - e) / zg;
    return s;
}

/// Run the full loop. Divergence (current beyond the configured multiple of
/// rated peak) stops the run early and flags the trace; it is reported as an
/// outcome, not an error.
inline SimTrace run(const SimConfig& cfg) {
    cfg.validate();
    const ControlLaw law(cfg);
    const double ts = law.sample_time;
    const double dt = ts / cfg.plant_substeps;
    const PlantDiscretizer plant(cfg.plant, cfg.grid, dt);
    const auto n_steps = static_cast<std::size_t>(std::llround(cfg.t_end / ts));
    const double i_cap = cfg.current_limit_multiple * cfg.rated_peak_current();

    const SteadyPhasors ss = steady_phasors(cfg);
    PlantState x{ss.i_f, ss.v_pcc, ss.i_g};

    ControllerState st;
    st.va_mode = cfg.va_schedule.front().mode;
    st.va = law.va_proto(st.va_mode);
    st.va.warm_start(ss.e_ivs - ss.v_pcc, ss.i_f);
    st.pr = law.pr_proto;
    if (law.k_cc_r != 0.0) {
        const Complex y0 = Complex{0.0, law.omega_1 * cfg.plant.l_f} * ss.i_f / law.k_cc_r;
        st.pr.s1 = y0;
        st.pr.s2 = y0 * (std::polar(1.0, law.omega_1 * ts) + st.pr.a1);
    }
    st.p_lpf = law.p_lpf_proto;
    st.q_lpf = law.q_lpf_proto;
    st.ivs_phase = 0.0;
    st.ivs_magnitude = law.e_nominal;
    st.delay_slot = ss.v_pcc + Complex{0.0, law.omega_1 * cfg.plant.l_f} * ss.i_f;
    st.last_i_ref = ss.i_f;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> dither(-cfg.dither_v, cfg.dither_v);

    const ControlRefs refs{cfg.p_ref, cfg.q_ref};
    const double e_grid_peak = cfg.nominal_emf_peak();
    const double w1 = cfg.controller.omega_1;

    SimTrace trace;
    trace.sample_time = ts;
    trace.records.reserve(n_steps);

    std::size_t sched_next = 1;
    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * ts;
        while (sched_next < cfg.va_schedule.size() &&
               t >= cfg.va_schedule[sched_next].t_start - 0.5 * ts) {
            const VaMode m = cfg.va_schedule[sched_next].mode;
            ++sched_next;
            if (m == st.va_mode) continue;
            // output-matched warm start: the incoming filter state is set to
            // reproduce the present input/output pair
            const Complex u0 = std::polar(st.ivs_magnitude, st.ivs_phase) - x.v_c;
            FirstOrderFilter next = law.va_proto(m);
            next.warm_start(u0, st.last_i_ref);
            st.va = next;
            st.va_mode = m;
        }

        Complex v_cmd = control_step(st, x.v_c, x.i_f, refs, law);
        if (cfg.dither_v > 0.0) {
            v_cmd += Complex{dither(rng), dither(rng)};
        }

        TraceRecord rec;
        rec.t = t;
        rec.e = st.last_e;
        rec.v_pcc = x.v_c;
        rec.i = x.i_f;
        rec.i_ref = st.last_i_ref;
        rec.v_cmd = st.delay_slot;
        rec.p = st.p_meas;
        rec.q = st.q_meas;
        rec.va_mode = st.va_mode;
        trace.records.push_back(rec);

        for (int sub = 0; sub < cfg.plant_substeps; ++sub) {
            // continuous sources sampled at the substep midpoint, so the
            // held value carries no phase bias
            const double t_sub = t + (sub + 0.5) * dt;
            Complex emf = std::polar(e_grid_peak, w1 * t_sub);
            if (cfg.injection.active() && t_sub >= cfg.injection.t_start_s) {
                emf += std::polar(cfg.injection.amplitude_v,
                                  2.0 * std::numbers::pi * cfg.injection.f_hz * t_sub);
            }
            x = plant.step(x, v_cmd, emf);
        }

        if (std::abs(x.i_f) > i_cap) {
            trace.diverged = true;
            trace.divergence_time = t + ts;
            break;
        }
    }
    return trace;
}

} // namespace gfmp
