#pragma once

#include <functional>

namespace oscidecay {

/// exp(1 - 1/(1 - x^2)) on [0, 1), zero elsewhere. Equals 1 at x = 0.
double mollifier(double x);

/// C-infinity step: 1 for x <= 0, 0 for x >= 1, exactly 1/2 at x = 1/2.
double smooth_step(double x);

/// Polynomial smoothstep of order k (C^k), same orientation as smooth_step.
double poly_step(double x, int k);

/// 1 for |x| <= r0, 0 for |x| >= r, smooth_step in between.
double cutoff(double x, double r0, double r);

struct Amplitude {
    std::function<double(double, double, double)> fn;
    double r = 2.0;
    double r0 = 1.5;
    // Set when fn(u,v,t) == cutoff(u)*cutoff(v)*cutoff(t); enables factored kernels.
    bool tensor = false;

    double operator()(double u, double v, double t) const { return fn(u, v, t); }
    double factor(double x) const { return cutoff(x, r0, r); }
};

/// Tensor-product cutoff with plateau half-width r0 and support half-width r.
Amplitude tensor_amplitude(double r0 = 1.5, double r = 2.0);

inline Amplitude default_amplitude() { return tensor_amplitude(); }

}  // namespace oscidecay
