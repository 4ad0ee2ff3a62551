#include "oscidecay/testfn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oscidecay/error.hpp"

namespace oscidecay {

void BumpSpec::validate() const {
    if (!(a < b && b < c && c < d)) {
        throw ValidationError("bump requires a < b < c < d");
    }
    if (smoothness == Smoothness::PolySmoothstep && poly_order < 1) {
        throw ValidationError("smoothstep order must be >= 1");
    }
}

RealFn make_bump(const BumpSpec& spec) {
    spec.validate();
    const auto s = spec;
    auto step = [s](double x) {
        return s.smoothness == Smoothness::CInfExp ? smooth_step(x) : poly_step(x, s.poly_order);
    };
    return [s, step](double x) {
        if (x <= s.a || x >= s.d) {
            return 0.0;
        }
        if (x < s.b) {
            return step((s.b - x) / (s.b - s.a));
        }
        if (x > s.c) {
            return step((x - s.c) / (s.d - s.c));
        }
        return 1.0;
    };
}

void ExtremalParams::validate() const {
    if (!(eps > 0.0 && eps < 0.5)) {
        throw ValidationError("eps must lie in (0, 1/2)");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ValidationError("lambda must be positive and finite");
    }
}

BumpSpec extremal_bump(const ExtremalParams& params) {
    params.validate();
    const double s = 1.0 / std::sqrt(params.lambda);
    BumpSpec b;
    b.a = s * (1.0 - params.eps);
    b.b = s * (1.0 - params.eps / 2.0);
    b.c = s * (1.0 + params.eps / 2.0);
    b.d = s * (1.0 + params.eps);
    b.smoothness = params.smoothness;
    return b;
}

int extremal_panels(const ExtremalParams& params, double box, int min_panels) {
    const BumpSpec b = extremal_bump(params);
    const double range = params.lambda * (box * (b.d * b.d - b.a * b.a) + box * box * (b.d - b.a));
    const int osc = static_cast<int>(std::ceil(4.0 * range / (2.0 * std::numbers::pi)));
    return std::max(min_panels, osc);
}

SampledFunction make_extremal(const ExtremalParams& params, int min_panels) {
    const BumpSpec b = extremal_bump(params);
    const int panels = extremal_panels(params, 2.0, min_panels);
    const int quarter = std::max(1, (panels + 3) / 4);
    std::vector<double> edges;
    auto add_segment = [&](double lo, double hi, int n) {
        for (int k = 0; k < n; ++k) {
            edges.push_back(lo + (hi - lo) * k / n);
        }
    };
    add_segment(b.a, b.b, quarter);
    add_segment(b.b, b.c, 2 * quarter);
    add_segment(b.c, b.d, quarter);
    edges.push_back(b.d);

    const Rule rule = composite_gl(10, edges);
    const RealFn f = make_bump(b);
    SampledFunction out;
    out.nodes = rule.nodes;
    out.weights = rule.weights;
    out.values.reserve(rule.size());
    for (double t : rule.nodes) {
        out.values.emplace_back(f(t), 0.0);
    }
    return out;
}

double l2_norm(const SampledFunction& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(f.weights[i] > 0.0)) {
            throw ValidationError("l2_norm requires positive weights");
        }
        acc += f.weights[i] * std::norm(f.values[i]);
    }
    return std::sqrt(acc);
}

const std::vector<double>& epsilon_candidates() {
    static const std::vector<double> c{0.5, 0.25, 0.1, 0.05, 0.025, 0.01, 0.005, 0.0025, 0.001};
    return c;
}

namespace {

template <class F>
void for_window(double eps, double lambda, F&& visit) {
    constexpr int n = 21;
    const double sv = std::pow(lambda, -0.25);
    const double st = std::pow(lambda, -0.5);
    for (int i = 0; i < n; ++i) {
        const double u = 1.0 - eps + 2.0 * eps * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double v = sv * (1.0 - eps + 2.0 * eps * j / (n - 1));
            for (int k = 0; k < n; ++k) {
                const double t = st * (1.0 - eps + 2.0 * eps * k / (n - 1));
                visit(lambda * (u * t * t + v * v * t));
            }
        }
    }
}

}  // namespace

double window_phase_deviation(double eps, double lambda) {
    double worst = 0.0;
    for_window(eps, lambda, [&](double ls) { worst = std::max(worst, std::abs(ls - 2.0)); });
    return worst;
}

double window_sine_min(double eps, double lambda) {
    double lo = 1.0;
    for_window(eps, lambda, [&](double ls) { lo = std::min(lo, std::sin(ls)); });
    return lo;
}

double calibrate_epsilon(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw ValidationError("delta must lie in (0, 1)");
    }
    for (double eps : epsilon_candidates()) {
        if (window_phase_deviation(eps) < delta) {
            return eps;
        }
    }
    throw NumericalError("no candidate eps satisfies the window bound");
}

}  // namespace oscidecay
