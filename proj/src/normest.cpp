#include "oscidecay/normest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oscidecay/error.hpp"
#include "oscidecay/testfn.hpp"

namespace oscidecay {

std::vector<UVPoint> UVGrid::points() const {
    std::vector<UVPoint> out;
    out.reserve(size());
    for (double uu : u.nodes) {
        for (double vv : v.nodes) {
            out.push_back({uu, vv});
        }
    }
    return out;
}

std::vector<double> UVGrid::point_weights() const {
    std::vector<double> out;
    out.reserve(size());
    for (double wu : u.weights) {
        for (double wv : v.weights) {
            out.push_back(wu * wv);
        }
    }
    return out;
}

UVGrid build_uv_grid(double lambda, double box, int base_n, const UVGridOptions& opts) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ValidationError("lambda must be positive and finite");
    }
    if (!(box > 0.0) || base_n < 1) {
        throw ValidationError("uv grid needs box > 0 and base_n >= 1");
    }
    if (!(opts.eps > 0.0 && opts.eps < 0.5)) {
        throw ValidationError("eps must lie in (0, 1/2)");
    }
    const double eps = opts.eps;
    const double scale = std::pow(lambda, -0.25);
    const double t_max = opts.t_extent > 0.0 ? opts.t_extent : (1.0 + eps) / std::sqrt(lambda);

    UVGrid grid;
    grid.v_refine_scale = scale;

    const double hu = eps / 4.0;
    const auto u_panels = static_cast<std::size_t>(std::ceil(2.0 * box / hu));

    const double inner = std::min(box, 2.0 * scale);
    const double h_in = eps * scale / 4.0;
    const auto n_in = static_cast<std::size_t>(std::ceil(2.0 * inner / h_in));

    std::vector<double> outer;  // edges in (inner, box]
    double v = inner;
    while (box - v > 1e-12 * box) {
        const double rate = 2.0 * lambda * v * t_max;
        double h = std::min(hu, 2.0 * std::numbers::pi / (opts.panels_per_oscillation * rate));
        h = std::max(h, h_in);
        v = (box - v < 1.5 * h) ? box : v + h;
        outer.push_back(v);
        if (outer.size() > opts.max_points) {
            break;
        }
    }

    const std::size_t v_panels = n_in + 2 * outer.size();
    const std::size_t total = static_cast<std::size_t>(base_n) * u_panels * static_cast<std::size_t>(base_n) * v_panels;
    if (total > opts.max_points) {
        std::ostringstream msg;
        msg << "uv grid needs " << total << " points (cap " << opts.max_points
            << "); lower lambda or use a smaller base order";
        throw CapExceededError(msg.str());
    }

    grid.u = composite_gl(base_n, -box, box, static_cast<int>(u_panels));

    std::vector<double> edges;
    edges.reserve(v_panels + 1);
    for (auto it = outer.rbegin(); it != outer.rend(); ++it) {
        edges.push_back(-*it);
    }
    for (std::size_t k = 0; k <= n_in; ++k) {
        edges.push_back(-inner + 2.0 * inner * static_cast<double>(k) / n_in);
    }
    edges.back() = inner;
    for (double e : outer) {
        edges.push_back(e);
    }
    grid.v = composite_gl(base_n, edges);
    return grid;
}

void DiscreteOperator::validate() const {
    if (row_weights.size() != matrix.rows || col_weights.size() != matrix.cols) {
        throw ValidationError("discrete operator: weights do not match matrix dimensions");
    }
    for (double w : row_weights) {
        if (!(w > 0.0)) throw ValidationError("discrete operator: row weights must be positive");
    }
    for (double w : col_weights) {
        if (!(w > 0.0)) throw ValidationError("discrete operator: column weights must be positive");
    }
}

DiscreteOperator discretize(const PhaseSpec& spec, double lambda, const Amplitude& phi, const Rule& t_grid,
                            const std::vector<UVPoint>& uv, const std::vector<double>& uv_weights) {
    if (uv.size() != uv_weights.size()) {
        throw ValidationError("uv points and weights differ in length");
    }
    DiscreteOperator op;
    op.matrix = kernels::SplitMatrix(uv.size(), t_grid.size());
    op.row_weights = uv_weights;
    op.col_weights = t_grid.weights;
    op.validate();

    const auto rows = static_cast<std::ptrdiff_t>(uv.size());
    const std::size_t cols = t_grid.size();
    bool bad = false;
    UVPoint bad_uv{};
    double bad_t = 0.0;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
        const double u = uv[i][0], v = uv[i][1];
        for (std::size_t j = 0; j < cols; ++j) {
            const double t = t_grid.nodes[j];
            const double ph = lambda * eval_phase(spec, u, v, t);
            const double amp = phi(u, v, t) * t_grid.weights[j];
            if (!std::isfinite(ph) || !std::isfinite(amp)) {
#pragma omp critical
                {
                    bad = true;
                    bad_uv = uv[i];
                    bad_t = t;
                }
                continue;
            }
            const std::size_t k = static_cast<std::size_t>(i) * cols + j;
            op.matrix.re[k] = amp * std::cos(ph);
            op.matrix.im[k] = amp * std::sin(ph);
        }
    }
    if (bad) {
        std::ostringstream msg;
        msg << "non-finite operator entry at (u,v,t)=(" << bad_uv[0] << "," << bad_uv[1] << "," << bad_t << ")";
        throw NonFiniteError(msg.str(), bad_uv[0], bad_uv[1], bad_t);
    }
    return op;
}

DiscreteOperator discretize(const PhaseSpec& spec, double lambda, const Amplitude& phi, const Rule& t_grid,
                            const UVGrid& uv_grid) {
    return discretize(spec, lambda, phi, t_grid, uv_grid.points(), uv_grid.point_weights());
}

void to_json(nlohmann::json& j, const NormResult& r) {
    j = nlohmann::json{{"value", r.value},         {"iterations", r.iterations}, {"residual", r.residual},
                       {"eig_residual", r.eig_residual}, {"grid_nt", r.grid_nt},       {"grid_nuv", r.grid_nuv}};
}

namespace {

double weighted_norm(const std::vector<cplx>& x, const std::vector<double>& w) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += w[i] * std::norm(x[i]);
    }
    return std::sqrt(acc);
}

cplx weighted_dot(const std::vector<cplx>& x, const std::vector<cplx>& y, const std::vector<double>& w) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc += w[i] * x[i] * std::conj(y[i]);
    }
    return acc;
}

}  // namespace

NormResult power_iteration(const NormalApply& apply, const std::vector<double>& weights, const PowerConfig& cfg) {
    if (!(cfg.tol > 0.0) || cfg.max_iter < 1 || cfg.confirm_iterations < 0) {
        throw ValidationError("power iteration needs tol > 0 and max_iter >= 1");
    }
    const std::size_t n = weights.size();
    NormResult res;
    res.grid_nt = n;
    if (n == 0) {
        return res;
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<cplx> x(n), y;
    for (auto& xi : x) {
        const double re = normal(rng);
        const double im = normal(rng);
        xi = {re, im};
    }
    double nx = weighted_norm(x, weights);
    for (auto& xi : x) xi /= nx;

    double prev = -1.0;
    int confirmed = -1;  // >= 0 once the tolerance has been met
    for (int it = 1; it <= cfg.max_iter; ++it) {
        apply(x, y);
        const double mu = weighted_dot(y, x, weights).real();
        const double ny = weighted_norm(y, weights);
        for (const auto& yi : y) {
            if (!std::isfinite(yi.real()) || !std::isfinite(yi.imag())) {
                throw NumericalError("power iteration produced a non-finite vector");
            }
        }
        const double sigma = std::sqrt(std::max(mu, 0.0));
        res.iterations = it;
        res.value = sigma;
        if (ny == 0.0) {
            res.residual = 0.0;
            res.eig_residual = 0.0;
            return res;
        }
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            r2 += weights[i] * std::norm(y[i] - mu * x[i]);
        }
        res.eig_residual = mu > 0.0 ? std::sqrt(r2) / mu : INFINITY;
        res.residual = prev >= 0.0 ? std::abs(sigma - prev) / std::max(sigma, 1e-300) : INFINITY;
        prev = sigma;

        if (res.residual <= cfg.tol) {
            confirmed = confirmed < 0 ? 0 : confirmed + 1;
            if (confirmed >= cfg.confirm_iterations) {
                return res;
            }
        } else {
            confirmed = -1;
        }
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = y[i] / ny;
        }
    }
    std::ostringstream msg;
    msg << "power iteration did not converge in " << cfg.max_iter << " iterations (last relative change "
        << res.residual << ")";
    throw NonConvergenceError(msg.str(), res.residual);
}

namespace {

NormResult discrete_norm(const DiscreteOperator& op, double tol, int max_iter, std::uint64_t seed, bool serial) {
    op.validate();
    std::vector<cplx> mx;
    auto apply = [&](const std::vector<cplx>& x, std::vector<cplx>& y) {
        if (serial) {
            kernels::matvec_serial(op.matrix, x, mx);
        } else {
            kernels::matvec(op.matrix, x, mx);
        }
        for (std::size_t i = 0; i < mx.size(); ++i) {
            mx[i] *= op.row_weights[i];
        }
        if (serial) {
            kernels::adjoint_matvec_serial(op.matrix, mx, y);
        } else {
            kernels::adjoint_matvec(op.matrix, mx, y);
        }
        for (std::size_t j = 0; j < y.size(); ++j) {
            y[j] /= op.col_weights[j];
        }
    };
    PowerConfig cfg;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.seed = seed;
    NormResult r = power_iteration(apply, op.col_weights, cfg);
    r.grid_nt = op.matrix.cols;
    r.grid_nuv = op.matrix.rows;
    return r;
}

}  // namespace

NormResult operator_norm(const DiscreteOperator& op, double tol, int max_iter, std::uint64_t seed) {
    return discrete_norm(op, tol, max_iter, seed, false);
}

NormResult operator_norm_serial(const DiscreteOperator& op, double tol, int max_iter, std::uint64_t seed) {
    return discrete_norm(op, tol, max_iter, seed, true);
}

std::vector<cplx> image_on_grid(const PhaseSpec& spec, double lambda, const Amplitude& phi, const SampledFunction& f,
                                const Rule& u, const Rule& v) {
    f.validate();
    if (!(spec.separable() && phi.tensor)) {
        std::vector<UVPoint> pts;
        pts.reserve(u.size() * v.size());
        for (double uu : u.nodes) {
            for (double vv : v.nodes) {
                pts.push_back({uu, vv});
            }
        }
        return apply_operator(spec, lambda, phi, f, pts);
    }
    // e^{i lambda D (P1 t^2 + P2 t)} = e^{i lambda D (p u t^2 + alpha u^2 t)} e^{i lambda D (q v t^2 + gamma v^2 t)}
    const double ld = lambda * spec.d_const;
    const std::size_t nt = f.size();
    auto fill = [&](const Rule& r, double lin, double quad) {
        kernels::SplitMatrix m(r.size(), nt);
        const auto rows = static_cast<std::ptrdiff_t>(r.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t a = 0; a < rows; ++a) {
            const double x = r.nodes[a];
            const double amp = phi.factor(x);
            for (std::size_t j = 0; j < nt; ++j) {
                const double t = f.nodes[j];
                const double ph = ld * (lin * x * t * t + quad * x * x * t);
                m.re[a * nt + j] = amp * std::cos(ph);
                m.im[a * nt + j] = amp * std::sin(ph);
            }
        }
        return m;
    };
    const kernels::SplitMatrix U = fill(u, spec.p1.p, spec.p2.alpha);
    const kernels::SplitMatrix V = fill(v, spec.p1.q, spec.p2.gamma);
    std::vector<cplx> g(nt);
    for (std::size_t j = 0; j < nt; ++j) {
        g[j] = f.weights[j] * phi.factor(f.nodes[j]) * f.values[j];
    }
    std::vector<cplx> out;
    kernels::separable_image(U, V, g, out);
    for (const auto& z : out) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            throw NonFiniteError("non-finite value of T f", NAN, NAN, NAN);
        }
    }
    return out;
}

double image_norm(const PhaseSpec& spec, double lambda, const Amplitude& phi, const SampledFunction& f,
                  const UVGrid& grid) {
    const auto tf = image_on_grid(spec, lambda, phi, f, grid.u, grid.v);
    double acc = 0.0;
    const std::size_t nv = grid.v.size();
    for (std::size_t a = 0; a < grid.u.size(); ++a) {
        for (std::size_t b = 0; b < nv; ++b) {
            acc += grid.u.weights[a] * grid.v.weights[b] * std::norm(tf[a * nv + b]);
        }
    }
    return std::sqrt(acc);
}

double rayleigh_quotient(const PhaseSpec& spec, double lambda, const Amplitude& phi, const SampledFunction& f,
                         const UVGrid& grid) {
    const double nf = l2_norm(f);
    if (nf == 0.0) {
        throw ValidationError("rayleigh quotient of the zero function");
    }
    return image_norm(spec, lambda, phi, f, grid) / nf;
}

void to_json(nlohmann::json& j, const WitnessRecord& r) {
    j = nlohmann::json{{"lambda", r.lambda},   {"eps", r.eps},
                       {"norm_f", r.norm_f},   {"norm_Tf", r.norm_Tf},
                       {"quotient", r.quotient}, {"pointwise_min", r.pointwise_min},
                       {"grid_nt", r.grid_nt}, {"grid_nuv", r.grid_nuv}};
}

std::pair<Rule, Rule> window_grid(double lambda, double eps, int n) {
    if (n < 2) {
        throw ValidationError("window grid needs at least 2 points per axis");
    }
    const double s = std::pow(lambda, -0.25);
    Rule u, v;
    for (int k = 0; k < n; ++k) {
        const double x = 1.0 - eps + 2.0 * eps * k / (n - 1);
        u.nodes.push_back(x);
        u.weights.push_back(1.0);
        v.nodes.push_back(s * x);
        v.weights.push_back(1.0);
    }
    return {u, v};
}

WitnessRecord witness_chain(double lambda, double eps, const WitnessConfig& cfg) {
    return witness_chain(normal_form_c(), default_amplitude(), lambda, eps, cfg);
}

WitnessRecord witness_chain(const PhaseSpec& spec, const Amplitude& phi, double lambda, double eps,
                            const WitnessConfig& cfg) {
    if (!(lambda >= 10.0)) {
        throw ValidationError("witness chain requires lambda >= 10");
    }
    const SampledFunction f = make_extremal({eps, lambda, Smoothness::CInfExp});

    UVGridOptions opts = cfg.grid;
    opts.eps = eps;
    const UVGrid grid = build_uv_grid(lambda, phi.r, cfg.base_n, opts);

    WitnessRecord rec;
    rec.lambda = lambda;
    rec.eps = eps;
    rec.norm_f = l2_norm(f);
    rec.norm_Tf = image_norm(spec, lambda, phi, f, grid);
    rec.quotient = rec.norm_Tf / rec.norm_f;

    const auto [wu, wv] = window_grid(lambda, eps, cfg.window_points);
    const auto tw = image_on_grid(spec, lambda, phi, f, wu, wv);
    double lo = INFINITY;
    for (const auto& z : tw) {
        lo = std::min(lo, std::abs(z));
    }
    rec.pointwise_min = lo;
    rec.grid_nt = f.size();
    rec.grid_nuv = grid.size();
    return rec;
}

}  // namespace oscidecay
