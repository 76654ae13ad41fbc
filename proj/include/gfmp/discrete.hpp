#pragma once

// Discrete-time filter building blocks for the sampled controller. All
// filters are bilinear (trapezoidal) discretizations acting on complex
// stationary-frame signals; coefficients stay real.

#include <cmath>
#include <complex>

#include "gfmp/transfer.hpp"

namespace gfmp {

/// Bilinear mapping constant: plain tustin uses 2/T, prewarped uses
/// w/tan(w T/2) so the response is exact at w.
inline double bilinear_k(double sample_time, double prewarp_rad_s = 0.0) {
    if (prewarp_rad_s > 0.0) {
        return prewarp_rad_s / std::tan(prewarp_rad_s * sample_time / 2.0);
    }
    return 2.0 / sample_time;
}

/// First-order (b1 s + b0)/(a1 s + a0) discretized with s = k (z-1)/(z+1),
/// stepped in transposed direct form II.
struct FirstOrderFilter {
    double b0 = 0.0, b1 = 0.0, a1 = 0.0;
    Complex s1{};

    FirstOrderFilter() = default;
    FirstOrderFilter(double num_s, double num_1, double den_s, double den_1, double k) {
        const double d = den_s * k + den_1;
        b0 = (num_s * k + num_1) / d;
        b1 = (num_1 - num_s * k) / d;
        a1 = (den_1 - den_s * k) / d;
    }

    Complex step(Complex u) {
        const Complex y = b0 * u + s1;
        s1 = b1 * u - a1 * y;
        return y;
    }

    /// Set the internal state so the next output for input u0 equals y0.
    void warm_start(Complex u0, Complex y0) { s1 = y0 - b0 * u0; }

    /// Discrete frequency response at z = e^{j w T}.
    Complex response(double w, double sample_time) const {
        const Complex zinv = std::exp(Complex{0.0, -w * sample_time});
        return (b0 + b1 * zinv) / (1.0 + a1 * zinv);
    }
};

/// Resonator s/(s^2 + w0^2), bilinear with prewarping at w0 so the discrete
/// poles sit exactly on the unit circle at +/- w0.
struct Resonator {
    double b0 = 0.0, a1 = 0.0; // b1 = 0, b2 = -b0, a2 = 1
    Complex s1{}, s2{};

    Resonator() = default;
    Resonator(double w0, double sample_time) {
        const double k = bilinear_k(sample_time, w0);
        const double d = k * k + w0 * w0;
        b0 = k / d;
        a1 = -2.0 * (k * k - w0 * w0) / d;
    }

    Complex step(Complex u) {
        const Complex y = b0 * u + s1;
        s1 = -a1 * y + s2;
        s2 = -b0 * u - y;
        return y;
    }
};

/// First-order unity-dc-gain low-pass w/(s+w) on a real signal.
struct LowPass {
    double b0 = 0.0, b1 = 0.0, a1 = 0.0;
    double s1 = 0.0;

    LowPass() = default;
    LowPass(double cutoff_rad_s, double sample_time) {
        const double k = bilinear_k(sample_time);
        const double d = k + cutoff_rad_s;
        b0 = cutoff_rad_s / d;
        b1 = cutoff_rad_s / d;
        a1 = (cutoff_rad_s - k) / d;
    }

    double step(double u) {
        const double y = b0 * u + s1;
        s1 = b1 * u - a1 * y;
        return y;
    }
};

} // namespace gfmp
