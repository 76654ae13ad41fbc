#pragma once

// Minimal frequency-response engine: rational functions and pure delays,
// composed into immutable expression trees and evaluated pointwise at any
// complex frequency. Coefficients are ascending-power real arrays; pure
// delays stay symbolic (never rationally approximated), so every evaluation
// is the exact arithmetic composition of the leaves.

#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "gfmp/errors.hpp"

namespace gfmp {

using Complex = std::complex<double>;

inline bool is_finite(Complex v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
}

/// Real-coefficient rational function, coefficients in ascending powers of s.
struct RationalElement {
    std::vector<double> num_coeffs;
    std::vector<double> den_coeffs;

    RationalElement(std::vector<double> num, std::vector<double> den)
        : num_coeffs(std::move(num)), den_coeffs(std::move(den)) {
        std::size_t top = den_coeffs.size();
        while (top > 0 && den_coeffs[top - 1] == 0.0) --top;
        if (top == 0) {
            throw InvalidRange("rational element: denominator is identically zero");
        }
        for (double c : num_coeffs) {
            if (!std::isfinite(c)) throw InvalidRange("rational element: non-finite numerator coefficient");
        }
        for (double c : den_coeffs) {
            if (!std::isfinite(c)) throw InvalidRange("rational element: non-finite denominator coefficient");
        }
    }

    /// Horner evaluation in complex arithmetic.
    Complex evaluate(Complex s) const {
        const Complex num = horner(num_coeffs, s);
        const Complex den = horner(den_coeffs, s);
        if (den == Complex{0.0, 0.0}) {
            throw PoleAtEvaluationPoint("rational element evaluated at a pole");
        }
        return num / den;
    }

private:
    static Complex horner(const std::vector<double>& c, Complex s) {
        Complex acc{0.0, 0.0};
        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
        return acc;
    }
};

/// Pure transport delay e^{-s T}.
struct DelayElement {
    double delay_s = 0.0;

    explicit DelayElement(double seconds) : delay_s(seconds) {
        if (!(seconds >= 0.0) || !std::isfinite(seconds)) {
            throw InvalidRange("delay element: delay must be finite and >= 0");
        }
    }

    Complex evaluate(Complex s) const { return std::exp(-s * delay_s); }
};

/// Composable frequency-domain element: a tree of rational functions and
/// delays under series product, parallel sum, inversion and scalar scaling.
/// Values are immutable after construction and safe to share across threads.
class TransferElement {
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    enum class Kind { rational, delay, series, sum, inverse, scale };

    struct Node {
        Kind kind;
        double scalar = 1.0;                     // scale nodes
        std::shared_ptr<const RationalElement> rat;
        std::shared_ptr<const DelayElement> del;
        NodePtr a, b;
    };

    NodePtr node_;

    explicit TransferElement(NodePtr n) : node_(std::move(n)) {}

    static Complex eval_node(const Node& n, Complex s) {
        switch (n.kind) {
        case Kind::rational: return n.rat->evaluate(s);
        case Kind::delay: return n.del->evaluate(s);
        case Kind::series: return eval_node(*n.a, s) * eval_node(*n.b, s);
        case Kind::sum: return eval_node(*n.a, s) + eval_node(*n.b, s);
        case Kind::inverse: {
            const Complex v = eval_node(*n.a, s);
            if (v == Complex{0.0, 0.0}) {
                throw PoleAtEvaluationPoint("inverse of an element that is zero at s");
            }
            return 1.0 / v;
        }
        case Kind::scale: return n.scalar * eval_node(*n.a, s);
        }
        throw NumericFailure("corrupt transfer element tree");
    }

public:
    static TransferElement rational(std::vector<double> num, std::vector<double> den) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::rational;
        n->rat = std::make_shared<RationalElement>(std::move(num), std::move(den));
        return TransferElement(std::move(n));
    }

    static TransferElement delay(double seconds) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::delay;
        n->del = std::make_shared<DelayElement>(seconds);
        return TransferElement(std::move(n));
    }

    static TransferElement constant(double k) { return rational({k}, {1.0}); }

    /// The bare Laplace variable s (handy for sL terms).
    static TransferElement s() { return rational({0.0, 1.0}, {1.0}); }

    friend TransferElement series(const TransferElement& x, const TransferElement& y) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::series;
        n->a = x.node_;
        n->b = y.node_;
        return TransferElement(std::move(n));
    }

    friend TransferElement parallel_sum(const TransferElement& x, const TransferElement& y) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::sum;
        n->a = x.node_;
        n->b = y.node_;
        return TransferElement(std::move(n));
    }

    friend TransferElement inverse(const TransferElement& x) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::inverse;
        n->a = x.node_;
        return TransferElement(std::move(n));
    }

    friend TransferElement scale(double k, const TransferElement& x) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::scale;
        n->scalar = k;
        n->a = x.node_;
        return TransferElement(std::move(n));
    }

    TransferElement operator*(const TransferElement& rhs) const { return series(*this, rhs); }
    TransferElement operator+(const TransferElement& rhs) const { return parallel_sum(*this, rhs); }
    TransferElement operator-(const TransferElement& rhs) const {
        return parallel_sum(*this, scale(-1.0, rhs));
    }
    TransferElement operator/(const TransferElement& rhs) const { return series(*this, inverse(rhs)); }

    Complex evaluate(Complex s) const {
        if (!is_finite(s)) throw InvalidRange("evaluate: s must be finite");
        const Complex v = eval_node(*node_, s);
        if (!is_finite(v)) throw NumericFailure("evaluate: non-finite result");
        return v;
    }

    /// Evaluate on the positive imaginary axis at angular frequency w.
    Complex at_omega(double w) const { return evaluate(Complex{0.0, w}); }
};

inline Complex evaluate(const TransferElement& elem, Complex s) { return elem.evaluate(s); }

// namespace-scope declarations of the hidden friends, for qualified lookup
TransferElement series(const TransferElement&, const TransferElement&);
TransferElement parallel_sum(const TransferElement&, const TransferElement&);
TransferElement inverse(const TransferElement&);
TransferElement scale(double, const TransferElement&);

/// Strictly ascending positive angular frequencies, rad/s.
class FrequencyGrid {
    std::vector<double> omega_;

public:
    explicit FrequencyGrid(std::vector<double> omega_rad_s) : omega_(std::move(omega_rad_s)) {
        if (omega_.empty()) throw InvalidRange("frequency grid: empty");
        double prev = 0.0;
        for (double w : omega_) {
            if (!std::isfinite(w) || w <= prev) {
                throw InvalidRange("frequency grid: points must be finite, positive, strictly ascending");
            }
            prev = w;
        }
    }

    std::size_t size() const { return omega_.size(); }
    double omega(std::size_t i) const { return omega_[i]; }
    double hz(std::size_t i) const { return omega_[i] / (2.0 * std::numbers::pi); }
    const std::vector<double>& omegas() const { return omega_; }

    bool operator==(const FrequencyGrid& rhs) const { return omega_ == rhs.omega_; }
};

/// Logarithmically spaced grid in Hz, endpoints included, stored in rad/s.
inline FrequencyGrid log_grid(double f_min_hz, double f_max_hz, int points_per_decade) {
    if (!(f_min_hz > 0.0) || !(f_max_hz > f_min_hz)) {
        throw InvalidRange("log_grid: need 0 < f_min < f_max");
    }
    if (points_per_decade < 1) throw InvalidRange("log_grid: points_per_decade must be >= 1");
    const double decades = std::log10(f_max_hz / f_min_hz);
    const auto n = static_cast<std::size_t>(std::ceil(decades * points_per_decade - 1e-9)) + 1;
    std::vector<double> w(n);
    const double ratio = f_max_hz / f_min_hz;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = (k + 1 == n)
                             ? f_max_hz
                             : f_min_hz * std::pow(ratio, static_cast<double>(k) / (n - 1));
        w[k] = 2.0 * std::numbers::pi * f;
    }
    return FrequencyGrid(std::move(w));
}

/// Complex response values paired with the grid they were evaluated on.
struct FrequencyResponse {
    FrequencyGrid grid;
    std::vector<Complex> values;
};

/// values[k] = elem(j * grid[k]); order preserved. Propagates
/// PoleAtEvaluationPoint with the offending index in the message.
inline FrequencyResponse frequency_response(const TransferElement& elem, const FrequencyGrid& grid) {
    std::vector<Complex> vals(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        try {
            vals[k] = elem.at_omega(grid.omega(k));
        } catch (const PoleAtEvaluationPoint& e) {
            throw PoleAtEvaluationPoint(std::string(e.what()) + " at grid index " +
                                        std::to_string(k) + " (" + std::to_string(grid.hz(k)) +
                                        " Hz)");
        }
    }
    return FrequencyResponse{grid, std::move(vals)};
}

} // namespace gfmp
