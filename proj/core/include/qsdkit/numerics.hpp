#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace qsd::num {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Controls the finite-difference schemes used for rate derivatives.
/// Default steps are eps^(1/3) (first derivatives) and eps^(1/4) (second
/// derivatives), times max(1, |scale|), followed by one Richardson step.
struct FdOptions {
    double step_factor = 1.0;
    bool richardson = true;
};

inline double first_step(double scale, const FdOptions& o = {}) {
    return std::cbrt(kEps) * std::max(1.0, std::abs(scale)) * o.step_factor;
}

inline double second_step(double scale, const FdOptions& o = {}) {
    return std::pow(kEps, 0.25) * std::max(1.0, std::abs(scale)) * o.step_factor;
}

/// d/dt f(t) at t = 0 by central differences.
template <class F>
double central_derivative(F&& f, double h, bool richardson = true) {
    auto d = [&](double s) { return (f(s) - f(-s)) / (2.0 * s); };
    double coarse = d(h);
    if (!richardson) return coarse;
    return (4.0 * d(0.5 * h) - coarse) / 3.0;
}

/// d/dt f(t) at t = 0 using only t >= 0 (two Richardson levels).
template <class F>
double forward_derivative(F&& f, double h, bool richardson = true) {
    double f0 = f(0.0);
    auto d = [&](double s) { return (f(s) - f0) / s; };
    double d1 = d(h);
    if (!richardson) return d1;
    double d2 = d(0.5 * h);
    double d4 = d(0.25 * h);
    double e1 = 2.0 * d2 - d1;
    double e2 = 2.0 * d4 - d2;
    return (4.0 * e2 - e1) / 3.0;
}

/// d^2/ds dt f(s, t) at (0, 0) by central differences.
template <class F>
double mixed_second_derivative(F&& f, double h, bool richardson = true) {
    auto d = [&](double s) { return (f(s, s) - f(s, -s) - f(-s, s) + f(-s, -s)) / (4.0 * s * s); };
    double coarse = d(h);
    if (!richardson) return coarse;
    return (4.0 * d(0.5 * h) - coarse) / 3.0;
}

/// Radical-inverse (Halton) low-discrepancy sequence in [0,1)^dim.
class Halton {
public:
    explicit Halton(int dim, std::uint64_t skip = 1) : dim_(dim), index_(skip) {}

    std::vector<double> next() {
        std::vector<double> p(static_cast<std::size_t>(dim_));
        for (int d = 0; d < dim_; ++d) p[static_cast<std::size_t>(d)] = radical_inverse(index_, prime(d));
        ++index_;
        return p;
    }

    static double radical_inverse(std::uint64_t n, std::uint64_t base) {
        double inv = 1.0 / static_cast<double>(base);
        double f = inv;
        double r = 0.0;
        while (n > 0) {
            r += f * static_cast<double>(n % base);
            n /= base;
            f *= inv;
        }
        return r;
    }

    static std::uint64_t prime(int i) {
        static constexpr std::uint64_t primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                                   41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};
        return primes[i % 24];
    }

private:
    int dim_;
    std::uint64_t index_;
};

} // namespace qsd::num
