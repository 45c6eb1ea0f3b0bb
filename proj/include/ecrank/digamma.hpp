#pragma once

// Complex digamma on the half-plane Re(z) >= 1: upward recurrence
// psi(z) = psi(z+1) - 1/z until |z| is large, then the asymptotic series
//
//   psi(z) ~ ln z - 1/(2z) - sum_k B_{2k} / (2k z^{2k}).
//
// With the recurrence threshold at |z| >= 16 the eight Bernoulli terms
// keep the absolute error below 1e-13 on vertical lines Re(z) >= 1.

#include <complex>

#include "ecrank/errors.hpp"

namespace ecrank {

inline std::complex<double> digamma_complex(std::complex<double> z) {
    if (z.real() < 1.0) throw DomainError("digamma_complex: requires Re(z) >= 1");

    std::complex<double> shift(0.0, 0.0);
    while (std::abs(z) < 16.0) {
        shift -= 1.0 / z;
        z += 1.0;
    }

    // B_{2k}/(2k) for k = 1..8
    static const double kCoef[8] = {
        1.0 / 12.0,       -1.0 / 120.0,      1.0 / 252.0,      -1.0 / 240.0,
        1.0 / 132.0,      -691.0 / 32760.0,  1.0 / 12.0,       -3617.0 / 8160.0,
    };

    const std::complex<double> inv = 1.0 / z;
    const std::complex<double> inv2 = inv * inv;
    std::complex<double> series(0.0, 0.0);
    std::complex<double> power = inv2;
    for (double c : kCoef) {
        series += c * power;
        power *= inv2;
    }
    return shift + std::log(z) - 0.5 * inv - series;
}

inline double digamma_real(double x) { return digamma_complex({x, 0.0}).real(); }

}  // namespace ecrank
