#pragma once

// The plateau bump family f_lambda used as a witness for the lower bound,
// together with the window calibration of its width parameter epsilon.

#include <vector>

#include "oscidecay/quadrature.hpp"

namespace oscidecay {

enum class Smoothness { CInfExp, PolySmoothstep };

struct BumpSpec {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;  // support (a,d), plateau [b,c]
    Smoothness smoothness = Smoothness::CInfExp;
    int poly_order = 3;

    void validate() const;
};

RealFn make_bump(const BumpSpec& spec);

struct ExtremalParams {
    double eps = 0.05;
    double lambda = 1.0;
    Smoothness smoothness = Smoothness::CInfExp;

    void validate() const;
};

/// Plateau lambda^{-1/2}(1 -+ eps/2), support lambda^{-1/2}(1 -+ eps).
BumpSpec extremal_bump(const ExtremalParams& params);

/// Panels used across the support of f_lambda: enough for the t-oscillation of
/// e^{i lambda (u t^2 + v^2 t)} with |u|,|v| <= box, and never fewer than min_panels.
int extremal_panels(const ExtremalParams& params, double box = 2.0, int min_panels = 64);

/// f_lambda tabulated on order-10 Gauss-Legendre panels aligned with the
/// plateau edges.
SampledFunction make_extremal(const ExtremalParams& params, int min_panels = 64);

double l2_norm(const SampledFunction& f);

/// Candidate widths tried by calibrate_epsilon, largest first.
const std::vector<double>& epsilon_candidates();

/// max |lambda S - 2| for the normal form (c) over the closed 21^3 grid of the
/// window u in 1 -+ eps, v in lambda^{-1/4}(1 -+ eps), t in lambda^{-1/2}(1 -+ eps).
double window_phase_deviation(double eps, double lambda = 1.0);

/// min of sin(lambda S) over the same grid.
double window_sine_min(double eps, double lambda = 1.0);

/// Largest candidate eps whose window deviation stays strictly below delta.
double calibrate_epsilon(double delta = 0.5);

}  // namespace oscidecay
