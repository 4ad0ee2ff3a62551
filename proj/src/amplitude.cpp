#include "oscidecay/amplitude.hpp"

#include <cmath>

#include "oscidecay/error.hpp"

namespace oscidecay {

double mollifier(double x) {
    if (x < 0.0 || x >= 1.0) {
        return 0.0;
    }
    return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

double smooth_step(double x) {
    if (x <= 0.0) {
        return 1.0;
    }
    if (x >= 1.0) {
        return 0.0;
    }
    const double a = mollifier(x);
    const double b = mollifier(1.0 - x);
    return a / (a + b);
}

double poly_step(double x, int k) {
    if (x <= 0.0) {
        return 1.0;
    }
    if (x >= 1.0) {
        return 0.0;
    }
    if (k < 1) {
        throw ValidationError("smoothstep order must be >= 1");
    }
    // Normalized incomplete beta I_x(k+1, k+1), evaluated as a binomial tail.
    const int n = 2 * k + 1;
    double rising = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= n; ++j) {
        if (j > 0) {
            binom = binom * (n - j + 1) / j;
        }
        if (j >= k + 1) {
            rising += binom * std::pow(x, j) * std::pow(1.0 - x, n - j);
        }
    }
    return 1.0 - rising;
}

double cutoff(double x, double r0, double r) { return smooth_step((std::abs(x) - r0) / (r - r0)); }

Amplitude tensor_amplitude(double r0, double r) {
    if (!(r0 > 0.0 && r0 < r)) {
        throw ValidationError("amplitude requires 0 < R0 < R");
    }
    Amplitude a;
    a.r = r;
    a.r0 = r0;
    a.tensor = true;
    a.fn = [r0, r](double u, double v, double t) { return cutoff(u, r0, r) * cutoff(v, r0, r) * cutoff(t, r0, r); };
    return a;
}

}  // namespace oscidecay
