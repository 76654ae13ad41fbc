#pragma once

// Fixed-size complex matrices with a scaling-and-squaring matrix exponential,
// used for exact zero-order-hold discretization of the small linear networks
// the simulator integrates.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

#include "gfmp/transfer.hpp"

namespace gfmp {

template <std::size_t N>
struct CMatrix {
    std::array<Complex, N * N> a{};

    Complex& operator()(std::size_t r, std::size_t c) { return a[r * N + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return a[r * N + c]; }

    static CMatrix identity() {
        CMatrix m;
        for (std::size_t i = 0; i < N; ++i) m(i, i) = 1.0;
        return m;
    }

    CMatrix operator*(const CMatrix& rhs) const {
        CMatrix out;
        for (std::size_t r = 0; r < N; ++r) {
            for (std::size_t k = 0; k < N; ++k) {
                const Complex v = (*this)(r, k);
                if (v == Complex{}) continue;
                for (std::size_t c = 0; c < N; ++c) out(r, c) += v * rhs(k, c);
            }
        }
        return out;
    }

    CMatrix operator+(const CMatrix& rhs) const {
        CMatrix out;
        for (std::size_t i = 0; i < N * N; ++i) out.a[i] = a[i] + rhs.a[i];
        return out;
    }

    CMatrix scaled(double k) const {
        CMatrix out;
        for (std::size_t i = 0; i < N * N; ++i) out.a[i] = a[i] * k;
        return out;
    }

    double norm_inf() const {
        double best = 0.0;
        for (std::size_t r = 0; r < N; ++r) {
            double row = 0.0;
            for (std::size_t c = 0; c < N; ++c) row += std::abs((*this)(r, c));
            best = std::max(best, row);
        }
        return best;
    }
};

/// exp(M) by scaling-and-squaring with a Taylor series run to convergence.
/// Adequate for the small, well-scaled matrices used here (||M|| << 10).
template <std::size_t N>
CMatrix<N> expm(const CMatrix<N>& m) {
    int squarings = 0;
    double norm = m.norm_inf();
    while (norm > 0.5) {
        norm *= 0.5;
        ++squarings;
    }
    const CMatrix<N> x = m.scaled(std::pow(0.5, squarings));
    CMatrix<N> result = CMatrix<N>::identity();
    CMatrix<N> term = CMatrix<N>::identity();
    for (int k = 1; k <= 40; ++k) {
        term = term * x;
        term = term.scaled(1.0 / k);
        result = result + term;
        if (term.norm_inf() < 1e-18 * result.norm_inf()) break;
    }
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

/// Discrete-time (A_d, B_d) for x' = A x + B u with u held constant over dt:
/// exp([[A, B], [0, 0]] dt) stacks both blocks.
template <std::size_t NS, std::size_t NU>
void zoh_discretize(const CMatrix<NS + NU>& augmented_a_b_times_dt, CMatrix<NS>& ad,
                    std::array<std::array<Complex, NU>, NS>& bd) {
    const CMatrix<NS + NU> e = expm(augmented_a_b_times_dt);
    for (std::size_t r = 0; r < NS; ++r) {
        for (std::size_t c = 0; c < NS; ++c) ad(r, c) = e(r, c);
        for (std::size_t c = 0; c < NU; ++c) bd[r][c] = e(r, NS + c);
    }
}

} // namespace gfmp
