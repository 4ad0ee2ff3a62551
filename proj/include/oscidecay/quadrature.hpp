#pragma once

// Composite Gauss-Legendre evaluation of
//   T_lambda f(u,v) = int e^{i lambda S(u,v,t)} Phi(u,v,t) f(t) dt.

#include <array>
#include <complex>
#include <functional>
#include <iosfwd>
#include <vector>

#include "oscidecay/amplitude.hpp"
#include "oscidecay/phase.hpp"

namespace oscidecay {

using cplx = std::complex<double>;
using ComplexFn = std::function<cplx(double)>;
using RealFn = std::function<double(double)>;

struct QuadConfig {
    int gl_order = 10;
    double panels_per_oscillation = 4.0;
    int min_panels = 8;
    int max_panels = 200000;

    void validate() const;
};

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }
    void append(const Rule& other);
};

struct SampledFunction {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<cplx> values;

    std::size_t size() const { return nodes.size(); }
    /// Throws ValidationError unless lengths match, nodes increase and weights are positive.
    void validate() const;
};

/// Gauss-Legendre rule of the given order mapped to [a, b].
Rule gl_panel(int order, double a, double b);

/// `panels` equal-width Gauss-Legendre panels covering [a, b].
Rule composite_gl(int order, double a, double b, int panels);

/// Panels covering [a, b] whose edges are `edges` (strictly increasing).
Rule composite_gl(int order, const std::vector<double>& edges);

int panel_count(double lambda, double phase_range, const QuadConfig& cfg);

/// max - min of s over 32 equispaced interior points plus both endpoints.
double estimate_phase_range(const RealFn& s, double a, double b);

/// int_a^b e^{i lambda phase(t)} g(t) dt with the panel count chosen from the
/// phase range. Direct-phase entry point: no PhaseSpec or amplitude involved.
cplx oscillatory_integral(const RealFn& phase, double lambda, const ComplexFn& g, double a, double b,
                          const QuadConfig& cfg = {});

/// Same integral with a fixed panel count (used for panel-doubling checks).
cplx oscillatory_integral_panels(const RealFn& phase, double lambda, const ComplexFn& g, double a, double b,
                                 int order, int panels);

cplx oscillatory_integral(const PhaseSpec& spec, double lambda, double u, double v, const Amplitude& phi,
                          const ComplexFn& f, double a, double b, const QuadConfig& cfg = {});

/// Integral against a tabulated f using f's own nodes and weights.
cplx oscillatory_integral(const PhaseSpec& spec, double lambda, double u, double v, const Amplitude& phi,
                          const SampledFunction& f);

using UVPoint = std::array<double, 2>;

/// T_lambda f at every (u,v) point, in input order. Parallel over points.
std::vector<cplx> apply_operator(const PhaseSpec& spec, double lambda, const Amplitude& phi,
                                 const SampledFunction& f, const std::vector<UVPoint>& uv);

/// Serial reference for apply_operator.
std::vector<cplx> apply_operator_serial(const PhaseSpec& spec, double lambda, const Amplitude& phi,
                                        const SampledFunction& f, const std::vector<UVPoint>& uv);

/// CSV with header "node,weight,re,im".
void write_csv(std::ostream& os, const SampledFunction& f);
SampledFunction read_sampled_csv(std::istream& is);

}  // namespace oscidecay
