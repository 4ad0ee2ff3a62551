#include "oscidecay/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "oscidecay/error.hpp"
#include "oscidecay/io.hpp"

namespace oscidecay {

void QuadConfig::validate() const {
    if (gl_order < 4) {
        throw ValidationError("gl_order must be >= 4");
    }
    if (!(panels_per_oscillation >= 1.0)) {
        throw ValidationError("panels_per_oscillation must be >= 1");
    }
    if (min_panels < 1 || max_panels < min_panels) {
        throw ValidationError("panel bounds must satisfy 1 <= min_panels <= max_panels");
    }
}

void Rule::append(const Rule& other) {
    nodes.insert(nodes.end(), other.nodes.begin(), other.nodes.end());
    weights.insert(weights.end(), other.weights.begin(), other.weights.end());
}

void SampledFunction::validate() const {
    if (nodes.size() != weights.size() || nodes.size() != values.size()) {
        throw ValidationError("sampled function: nodes, weights and values differ in length");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!(weights[i] > 0.0)) {
            throw ValidationError("sampled function: weights must be positive");
        }
        if (i > 0 && !(nodes[i] > nodes[i - 1])) {
            throw ValidationError("sampled function: nodes must be strictly increasing");
        }
    }
}

namespace {

// Reference rule on [-1, 1], ascending.
const Rule& reference_rule(int order) {
    static std::mutex mu;
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it != cache.end()) {
        return it->second;
    }
    gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(order));
    if (table == nullptr) {
        throw NumericalError("failed to build Gauss-Legendre table");
    }
    Rule r;
    r.nodes.resize(order);
    r.weights.resize(order);
    for (int i = 0; i < order; ++i) {
        gsl_integration_glfixed_point(-1.0, 1.0, static_cast<std::size_t>(i), &r.nodes[i], &r.weights[i], table);
    }
    gsl_integration_glfixed_table_free(table);
    std::vector<int> idx(order);
    for (int i = 0; i < order; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return r.nodes[a] < r.nodes[b]; });
    Rule sorted;
    for (int i : idx) {
        sorted.nodes.push_back(r.nodes[i]);
        sorted.weights.push_back(r.weights[i]);
    }
    return cache.emplace(order, std::move(sorted)).first->second;
}

}  // namespace

Rule gl_panel(int order, double a, double b) {
    if (order < 1) {
        throw ValidationError("Gauss-Legendre order must be >= 1");
    }
    if (!(a < b)) {
        throw ValidationError("panel requires a < b");
    }
    const Rule& ref = reference_rule(order);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    Rule r;
    r.nodes.reserve(order);
    r.weights.reserve(order);
    for (int i = 0; i < order; ++i) {
        r.nodes.push_back(mid + half * ref.nodes[i]);
        r.weights.push_back(half * ref.weights[i]);
    }
    return r;
}

Rule composite_gl(int order, double a, double b, int panels) {
    if (panels < 1) {
        throw ValidationError("panel count must be >= 1");
    }
    std::vector<double> edges(panels + 1);
    for (int k = 0; k <= panels; ++k) {
        edges[k] = a + (b - a) * static_cast<double>(k) / panels;
    }
    edges.back() = b;
    return composite_gl(order, edges);
}

Rule composite_gl(int order, const std::vector<double>& edges) {
    if (edges.size() < 2) {
        throw ValidationError("need at least one panel");
    }
    Rule r;
    r.nodes.reserve(order * (edges.size() - 1));
    r.weights.reserve(order * (edges.size() - 1));
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        r.append(gl_panel(order, edges[k], edges[k + 1]));
    }
    return r;
}

int panel_count(double lambda, double phase_range, const QuadConfig& cfg) {
    const double want = std::ceil(cfg.panels_per_oscillation * std::abs(lambda) * phase_range / (2.0 * std::numbers::pi));
    if (!(want < static_cast<double>(cfg.max_panels))) {
        return cfg.max_panels;
    }
    return std::max(cfg.min_panels, static_cast<int>(want));
}

double estimate_phase_range(const RealFn& s, double a, double b) {
    constexpr int kSamples = 32;
    double lo = std::min(s(a), s(b));
    double hi = std::max(s(a), s(b));
    for (int k = 1; k <= kSamples; ++k) {
        const double val = s(a + (b - a) * k / (kSamples + 1.0));
        lo = std::min(lo, val);
        hi = std::max(hi, val);
    }
    return hi - lo;
}

namespace {

cplx integrate_rule(const RealFn& phase, double lambda, const ComplexFn& g, const Rule& rule, double u, double v) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double t = rule.nodes[i];
        const cplx gi = g(t);
        const double ph = lambda * phase(t);
        if (!std::isfinite(gi.real()) || !std::isfinite(gi.imag()) || !std::isfinite(ph)) {
            std::ostringstream msg;
            msg << "non-finite integrand at (u,v,t)=(" << u << "," << v << "," << t << ")";
            throw NonFiniteError(msg.str(), u, v, t);
        }
        acc += rule.weights[i] * std::polar(1.0, ph) * gi;
    }
    return acc;
}

// Panel edges for [a, b] with `panels` panels in total, split so that every
// breakpoint inside (a, b) is a panel edge.
std::vector<double> split_edges(double a, double b, int panels, const std::vector<double>& breaks) {
    std::vector<double> cuts{a};
    for (double x : breaks) {
        if (x > a && x < b) cuts.push_back(x);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    std::vector<double> edges{a};
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double len = cuts[k + 1] - cuts[k];
        const int n = std::max(1, static_cast<int>(std::ceil(panels * len / (b - a))));
        for (int i = 1; i <= n; ++i) {
            edges.push_back(i == n ? cuts[k + 1] : cuts[k] + len * i / n);
        }
    }
    return edges;
}

cplx integrate_uv(const RealFn& phase, double lambda, const ComplexFn& g, double a, double b, const QuadConfig& cfg,
                  double u, double v, const std::vector<double>& breaks = {}) {
    cfg.validate();
    if (!(a < b)) {
        throw ValidationError("integration interval must satisfy a < b");
    }
    const int panels = panel_count(lambda, estimate_phase_range(phase, a, b), cfg);
    return integrate_rule(phase, lambda, g, composite_gl(cfg.gl_order, split_edges(a, b, panels, breaks)), u, v);
}

}  // namespace

cplx oscillatory_integral(const RealFn& phase, double lambda, const ComplexFn& g, double a, double b,
                          const QuadConfig& cfg) {
    return integrate_uv(phase, lambda, g, a, b, cfg, std::nan(""), std::nan(""));
}

cplx oscillatory_integral_panels(const RealFn& phase, double lambda, const ComplexFn& g, double a, double b,
                                 int order, int panels) {
    return integrate_rule(phase, lambda, g, composite_gl(order, a, b, panels), std::nan(""), std::nan(""));
}

cplx oscillatory_integral(const PhaseSpec& spec, double lambda, double u, double v, const Amplitude& phi,
                          const ComplexFn& f, double a, double b, const QuadConfig& cfg) {
    auto phase = [&](double t) { return eval_phase(spec, u, v, t); };
    auto g = [&](double t) { return phi(u, v, t) * f(t); };
    // the cutoff is only C-infinity at its plateau and support edges
    return integrate_uv(phase, lambda, g, a, b, cfg, u, v, {-phi.r, -phi.r0, phi.r0, phi.r});
}

cplx oscillatory_integral(const PhaseSpec& spec, double lambda, double u, double v, const Amplitude& phi,
                          const SampledFunction& f) {
    cplx acc = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double t = f.nodes[j];
        const double ph = lambda * eval_phase(spec, u, v, t);
        const double amp = phi(u, v, t);
        if (!std::isfinite(ph) || !std::isfinite(amp) || !std::isfinite(f.values[j].real()) ||
            !std::isfinite(f.values[j].imag())) {
            std::ostringstream msg;
            msg << "non-finite integrand at (u,v,t)=(" << u << "," << v << "," << t << ")";
            throw NonFiniteError(msg.str(), u, v, t);
        }
        acc += f.weights[j] * amp * std::polar(1.0, ph) * f.values[j];
    }
    return acc;
}

std::vector<cplx> apply_operator_serial(const PhaseSpec& spec, double lambda, const Amplitude& phi,
                                        const SampledFunction& f, const std::vector<UVPoint>& uv) {
    std::vector<cplx> out(uv.size());
    for (std::size_t i = 0; i < uv.size(); ++i) {
        out[i] = oscillatory_integral(spec, lambda, uv[i][0], uv[i][1], phi, f);
    }
    return out;
}

std::vector<cplx> apply_operator(const PhaseSpec& spec, double lambda, const Amplitude& phi,
                                 const SampledFunction& f, const std::vector<UVPoint>& uv) {
    std::vector<cplx> out(uv.size());
    const auto n = static_cast<std::ptrdiff_t>(uv.size());
    bool failed = false;
    NonFiniteError first("", 0, 0, 0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = oscillatory_integral(spec, lambda, uv[i][0], uv[i][1], phi, f);
        } catch (const NonFiniteError& e) {
#pragma omp critical
            if (!failed) {
                failed = true;
                first = e;
            }
        }
    }
    if (failed) {
        throw first;
    }
    return out;
}

void write_csv(std::ostream& os, const SampledFunction& f) {
    os << "node,weight,re,im\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        os << format_double(f.nodes[i]) << ',' << format_double(f.weights[i]) << ','
           << format_double(f.values[i].real()) << ',' << format_double(f.values[i].imag()) << '\n';
    }
}

SampledFunction read_sampled_csv(std::istream& is) {
    SampledFunction f;
    std::string line;
    if (!std::getline(is, line) || line.rfind("node,weight,re,im", 0) != 0) {
        throw ValidationError("sampled function CSV must start with header node,weight,re,im");
    }
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != 4) {
            throw ValidationError("sampled function CSV rows need 4 columns");
        }
        f.nodes.push_back(parse_double(cells[0]));
        f.weights.push_back(parse_double(cells[1]));
        f.values.emplace_back(parse_double(cells[2]), parse_double(cells[3]));
    }
    f.validate();
    return f;
}

}  // namespace oscidecay
