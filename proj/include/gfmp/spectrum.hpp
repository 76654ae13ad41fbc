#pragma once

// Single-sided amplitude spectra of simulation traces with dominant-harmonic
// detection. The transform is a radix-2 FFT with a Bluestein fallback for
// arbitrary window lengths, so no samples are discarded or zero-padded.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "gfmp/errors.hpp"
#include "gfmp/simulator.hpp"

namespace gfmp {

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 FFT (forward: sign = -1).
inline void fft_radix2(std::vector<Complex>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const Complex wl{std::cos(ang), std::sin(ang)};
        for (std::size_t i = 0; i < n; i += len) {
            Complex w{1.0, 0.0};
            for (std::size_t k = 0; k < len / 2; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (sign > 0) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

/// Bluestein chirp-z transform: DFT of arbitrary length via radix-2.
inline std::vector<Complex> dft_bluestein(const std::vector<Complex>& x) {
    const std::size_t n = x.size();
    std::size_t m = 1;
    while (m < 2 * n + 1) m <<= 1;
    std::vector<Complex> a(m), b(m);
    std::vector<Complex> chirp(n);
    for (std::size_t k = 0; k < n; ++k) {
        // angle = pi k^2 / n, k^2 reduced mod 2n to keep the argument small
        const std::size_t k2 = (k * k) % (2 * n);
        const double ang = std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = Complex{std::cos(ang), -std::sin(ang)};
        a[k] = x[k] * chirp[k];
        b[k] = std::conj(chirp[k]);
        if (k != 0) b[m - k] = std::conj(chirp[k]);
    }
    fft_radix2(a, -1);
    fft_radix2(b, -1);
    for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
    fft_radix2(a, +1);
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * chirp[k];
    return out;
}

inline std::vector<Complex> dft(std::vector<Complex> x) {
    if (is_pow2(x.size())) {
        fft_radix2(x, -1);
        return x;
    }
    return dft_bluestein(x);
}

} // namespace detail

enum class SpectrumWindow { rectangular, hann };

inline const char* to_string(SpectrumWindow w) {
    return w == SpectrumWindow::rectangular ? "rectangular" : "hann";
}

/// Trace channel selector for spectra. Phase quantities project the
/// amplitude-invariant alpha-beta vector (a = Re, b/c rotated by -/+ 120 deg).
enum class TraceChannel { i_a, i_b, i_c, i_alpha, i_beta, v_a, v_alpha, v_beta };

inline double project_channel(const TraceRecord& r, TraceChannel ch) {
    constexpr double two_thirds_pi = 2.0 * std::numbers::pi / 3.0;
    switch (ch) {
    case TraceChannel::i_a: return r.i.real();
    case TraceChannel::i_b: return (r.i * std::polar(1.0, -two_thirds_pi)).real();
    case TraceChannel::i_c: return (r.i * std::polar(1.0, two_thirds_pi)).real();
    case TraceChannel::i_alpha: return r.i.real();
    case TraceChannel::i_beta: return r.i.imag();
    case TraceChannel::v_a: return r.v_pcc.real();
    case TraceChannel::v_alpha: return r.v_pcc.real();
    case TraceChannel::v_beta: return r.v_pcc.imag();
    }
    throw InvalidRange("unknown trace channel");
}

struct SpectrumReport {
    std::vector<double> f_hz;
    std::vector<double> magnitude; ///< single-sided amplitude, coherent-gain corrected
    double dominant_harmonic_hz = 0.0;
    double dominant_magnitude = 0.0;
    SpectrumWindow window = SpectrumWindow::rectangular;
    double fundamental_hz = 0.0;
};

/// Single-sided amplitude spectrum of one channel over [t_start, t_end).
/// The dominant harmonic search excludes dc and the fundamental +/- 2 bins.
inline SpectrumReport fft_spectrum(const SimTrace& trace, TraceChannel channel,
                                   SpectrumWindow window, double t_start, double t_end,
                                   double fundamental_hz = 60.0) {
    if (trace.records.empty() || trace.sample_time <= 0.0) {
        throw FileFormatError("fft_spectrum: empty trace");
    }
    const double ts = trace.sample_time;
    const double t0 = trace.records.front().t;
    auto idx0 = static_cast<std::ptrdiff_t>(std::llround((t_start - t0) / ts));
    auto idx1 = static_cast<std::ptrdiff_t>(std::llround((t_end - t0) / ts));
    idx0 = std::max<std::ptrdiff_t>(idx0, 0);
    idx1 = std::min<std::ptrdiff_t>(idx1, static_cast<std::ptrdiff_t>(trace.records.size()));
    if (idx1 <= idx0) throw InvalidRange("fft_spectrum: empty window");
    const auto n = static_cast<std::size_t>(idx1 - idx0);
    if (static_cast<double>(n) * ts < 5.0 / fundamental_hz) {
        throw WindowTooShort("fft_spectrum: window must cover at least 5 fundamental cycles");
    }

    std::vector<Complex> x(n);
    double coherent_gain = 1.0;
    if (window == SpectrumWindow::hann) {
        coherent_gain = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double w =
                0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * k / static_cast<double>(n - 1)));
            x[k] = w * project_channel(trace.records[idx0 + k], channel);
            coherent_gain += w;
        }
        coherent_gain /= static_cast<double>(n);
    } else {
        for (std::size_t k = 0; k < n; ++k) {
            x[k] = project_channel(trace.records[idx0 + k], channel);
        }
    }

    std::vector<Complex> spec = detail::dft(std::move(x));
    SpectrumReport rep;
    rep.window = window;
    rep.fundamental_hz = fundamental_hz;
    const std::size_t half = n / 2 + 1;
    rep.f_hz.resize(half);
    rep.magnitude.resize(half);
    const double df = 1.0 / (static_cast<double>(n) * ts);
    for (std::size_t k = 0; k < half; ++k) {
        rep.f_hz[k] = static_cast<double>(k) * df;
        const double scale = (k == 0 || 2 * k == n) ? 1.0 : 2.0;
        rep.magnitude[k] = scale * std::abs(spec[k]) / (static_cast<double>(n) * coherent_gain);
    }

    const auto k_fund = static_cast<std::ptrdiff_t>(std::llround(fundamental_hz / df));
    double best = -1.0;
    for (std::size_t k = 1; k < half; ++k) {
        const auto dk = static_cast<std::ptrdiff_t>(k) - k_fund;
        if (dk >= -2 && dk <= 2) continue;
        if (rep.magnitude[k] > best) {
            best = rep.magnitude[k];
            rep.dominant_harmonic_hz = rep.f_hz[k];
            rep.dominant_magnitude = rep.magnitude[k];
        }
    }
    return rep;
}

/// Log-linear growth-rate fit of the non-fundamental residual, per
/// fundamental cycle, over [t_start, t_end). Returns 1/s; negative = decay.
inline double estimate_growth_rate(const SimTrace& trace, double t_start, double t_end,
                                   double fundamental_hz = 60.0) {
    const double ts = trace.sample_time;
    const auto per_cycle = static_cast<std::size_t>(std::llround(1.0 / (fundamental_hz * ts)));
    const double t0 = trace.records.front().t;
    auto idx0 = static_cast<std::size_t>(std::max(0.0, std::round((t_start - t0) / ts)));
    auto idx1 = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(trace.records.size()), std::round((t_end - t0) / ts)));
    std::vector<double> rms;
    const double w1 = 2.0 * std::numbers::pi * fundamental_hz;
    for (std::size_t k = idx0; k + per_cycle <= idx1; k += per_cycle) {
        Complex fund{};
        for (std::size_t j = 0; j < per_cycle; ++j) {
            const auto& r = trace.records[k + j];
            fund += r.i * std::polar(1.0, -w1 * r.t);
        }
        fund /= static_cast<double>(per_cycle);
        double acc = 0.0;
        for (std::size_t j = 0; j < per_cycle; ++j) {
            const auto& r = trace.records[k + j];
            acc += std::norm(r.i - fund * std::polar(1.0, w1 * r.t));
        }
        rms.push_back(std::sqrt(acc / static_cast<double>(per_cycle)));
    }
    if (rms.size() < 2) return 0.0;
    // least-squares slope of log(rms) vs cycle index over the growing
    // portion only (saturation flattens the envelope past the peak)
    std::size_t peak = 0;
    for (std::size_t k = 1; k < rms.size(); ++k) {
        if (rms[k] > rms[peak]) peak = k;
    }
    const std::size_t fit_end = std::max<std::size_t>(peak + 1, 2);
    const double dt_cycle = static_cast<double>(per_cycle) * ts;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    for (std::size_t k = 0; k < std::min(fit_end, rms.size()); ++k) {
        if (rms[k] <= 0.0) continue;
        const double xx = static_cast<double>(k) * dt_cycle;
        const double yy = std::log(rms[k]);
        sx += xx;
        sy += yy;
        sxx += xx * xx;
        sxy += xx * yy;
        ++m;
    }
    if (m < 2) return 0.0;
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    if (denom == 0.0) return 0.0;
    return (static_cast<double>(m) * sxy - sx * sy) / denom;
}

} // namespace gfmp
