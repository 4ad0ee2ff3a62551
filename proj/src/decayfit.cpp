#include "oscidecay/decayfit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "oscidecay/error.hpp"
#include "oscidecay/io.hpp"
#include "oscidecay/testfn.hpp"

namespace oscidecay {

const char* to_string(SweepMode m) {
    switch (m) {
        case SweepMode::Rayleigh:
            return "rayleigh";
        case SweepMode::Opnorm:
            return "opnorm";
        case SweepMode::NormF:
            return "norm_f";
        case SweepMode::Pointwise:
            return "pointwise";
        case SweepMode::Image:
            return "image";
    }
    return "unknown";
}

SweepMode parse_sweep_mode(const std::string& s) {
    for (SweepMode m : {SweepMode::Rayleigh, SweepMode::Opnorm, SweepMode::NormF, SweepMode::Pointwise,
                        SweepMode::Image}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    throw ValidationError("unknown mode '" + s + "' (expected rayleigh, opnorm, norm_f, pointwise or image)");
}

const char* to_string(FitModel m) { return m == FitModel::PurePower ? "pure_power" : "power_with_log"; }

std::vector<double> geometric_lambdas(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi) || count < 2) {
        throw ValidationError("lambda range needs 0 < lambda_min < lambda_max and count >= 2");
    }
    std::vector<double> out(count);
    const double a = std::log(lo), b = std::log(hi);
    for (int k = 0; k < count; ++k) {
        out[k] = std::exp(a + (b - a) * k / (count - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

double resolve_eps(const SweepConfig& cfg) { return cfg.eps > 0.0 ? cfg.eps : calibrate_epsilon(cfg.delta); }

namespace {

void validate_lambdas(const std::vector<double>& lambdas) {
    if (lambdas.size() < 5) {
        throw ValidationError("a sweep needs at least 5 lambda values");
    }
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        if (!(lambdas[k] > 0.0) || !std::isfinite(lambdas[k])) {
            throw ValidationError("sweep lambdas must be positive and finite");
        }
        if (k > 0 && !(lambdas[k] > lambdas[k - 1])) {
            throw ValidationError("sweep lambdas must be strictly increasing");
        }
    }
}

// Uniform panels on [-R, R]^2 x [-R, R] resolving the oscillation of e^{i lambda S}.
NormResult direct_operator_norm(const PhaseSpec& spec, double lambda, const Amplitude& phi, const SweepConfig& cfg) {
    const double r = phi.r;
    const double d = spec.d_const;
    const auto& p1 = spec.p1;
    const auto& p2 = spec.p2;
    const double rate_t = d * (2.0 * r * r * (std::abs(p1.p) + std::abs(p1.q)) +
                               r * r * (std::abs(p2.alpha) + std::abs(p2.beta) + std::abs(p2.gamma)));
    const double rate_u = d * (std::abs(p1.p) * r * r + (2.0 * std::abs(p2.alpha) + std::abs(p2.beta)) * r * r);
    const double rate_v = d * (std::abs(p1.q) * r * r + (2.0 * std::abs(p2.gamma) + std::abs(p2.beta)) * r * r);
    auto panels = [&](double rate) {
        return panel_count(lambda, rate * 2.0 * r, cfg.quad);
    };
    const Rule t = composite_gl(cfg.quad.gl_order, -r, r, panels(rate_t));
    UVGrid grid;
    grid.u = composite_gl(cfg.direct_base_n, -r, r, panels(rate_u));
    grid.v = composite_gl(cfg.direct_base_n, -r, r, panels(rate_v));
    if (grid.size() > cfg.direct_max_points || grid.size() * t.size() > 50 * cfg.direct_max_points) {
        std::ostringstream msg;
        msg << "direct discretization at lambda=" << lambda << " needs " << grid.size() << " x " << t.size()
            << " entries; lower lambda";
        throw CapExceededError(msg.str());
    }
    const DiscreteOperator op = discretize(spec, lambda, phi, t, grid);
    return operator_norm(op, cfg.power.tol, cfg.power.max_iter, cfg.power.seed);
}

}  // namespace

NormResult estimate_operator_norm(const PhaseSpec& spec, double lambda, const SweepConfig& cfg) {
    const Amplitude phi = default_amplitude();
    if (GramOperator::supports(spec, phi)) {
        PowerConfig pc = cfg.power;
        pc.seed = cfg.seed;
        return gram_operator_norm(spec, lambda, phi, cfg.gram, pc);
    }
    SweepConfig c = cfg;
    c.power.seed = cfg.seed;
    return direct_operator_norm(spec, lambda, phi, c);
}

std::vector<WitnessRow> witness_sweep(const PhaseSpec& spec, const std::vector<double>& lambdas,
                                      const SweepConfig& cfg) {
    validate_lambdas(lambdas);
    const double eps = resolve_eps(cfg);
    const Amplitude phi = default_amplitude();
    std::vector<WitnessRow> out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas) {
        WitnessRow row;
        row.record.lambda = lambda;
        row.record.eps = eps;
        try {
            row.record = witness_chain(spec, phi, lambda, eps, cfg.witness);
        } catch (const Error& e) {
            row.ok = false;
            row.error = e.what();
        }
        out.push_back(row);
    }
    return out;
}

std::vector<SweepRow> rows_from_witness(const std::vector<WitnessRow>& rows, SweepMode mode, const SweepConfig& cfg) {
    if (mode == SweepMode::Opnorm) {
        throw ValidationError("opnorm is not a witness quantity");
    }
    std::vector<SweepRow> out;
    for (const auto& w : rows) {
        SweepRow r;
        r.lambda = w.record.lambda;
        r.mode = mode;
        r.ok = w.ok;
        r.error = w.error;
        r.grid_nt = w.record.grid_nt;
        r.grid_nuv = w.record.grid_nuv;
        r.eps = w.record.eps;
        r.delta = cfg.delta;
        r.seed = cfg.seed;
        switch (mode) {
            case SweepMode::Rayleigh:
                r.quantity = w.record.quotient;
                break;
            case SweepMode::NormF:
                r.quantity = w.record.norm_f;
                break;
            case SweepMode::Pointwise:
                r.quantity = w.record.pointwise_min;
                break;
            case SweepMode::Image:
                r.quantity = w.record.norm_Tf;
                break;
            case SweepMode::Opnorm:
                break;
        }
        if (r.ok && !(r.quantity > 0.0)) {
            r.ok = false;
            r.error = "non-positive quantity";
        }
        out.push_back(r);
    }
    return out;
}

std::vector<SweepRow> sweep(const PhaseSpec& spec, const std::vector<double>& lambdas, SweepMode mode,
                            const SweepConfig& cfg) {
    validate_lambdas(lambdas);
    if (mode != SweepMode::Opnorm) {
        return rows_from_witness(witness_sweep(spec, lambdas, cfg), mode, cfg);
    }
    std::vector<SweepRow> out;
    for (double lambda : lambdas) {
        SweepRow r;
        r.lambda = lambda;
        r.mode = mode;
        r.seed = cfg.seed;
        r.delta = cfg.delta;
        try {
            const NormResult nr = estimate_operator_norm(spec, lambda, cfg);
            r.quantity = nr.value;
            r.grid_nt = nr.grid_nt;
            r.grid_nuv = nr.grid_nuv;
            r.iterations = nr.iterations;
            if (!(r.quantity > 0.0)) {
                r.ok = false;
                r.error = "non-positive operator norm";
            }
        } catch (const Error& e) {
            r.ok = false;
            r.error = e.what();
        }
        out.push_back(r);
    }
    return out;
}

void to_json(nlohmann::json& j, const DecayFit& f) {
    j = nlohmann::json{{"model", to_string(f.model)},
                       {"slope", f.slope},
                       {"intercept", f.intercept},
                       {"r_squared", f.r_squared},
                       {"slope_stderr", f.slope_stderr},
                       {"max_abs_residual", f.max_abs_residual},
                       {"n", f.n}};
    if (f.model == FitModel::PowerWithLog) {
        j["log_coef"] = f.log_coef;
        j["log_coef_stderr"] = f.log_coef_stderr;
    }
}

DecayFit fit_power_law(const std::vector<double>& lambdas, const std::vector<double>& values, FitModel model) {
    if (lambdas.size() != values.size()) {
        throw ValidationError("fit: lambdas and values differ in length");
    }
    const std::size_t n = lambdas.size();
    if (n < 5) {
        throw ValidationError("fit needs at least 5 points");
    }
    const int p = model == FitModel::PurePower ? 2 : 3;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(lambdas[i] > 0.0) || !(values[i] > 0.0)) {
            throw ValidationError("fit needs positive lambdas and values");
        }
        if (model == FitModel::PowerWithLog && !(lambdas[i] > 1.0)) {
            throw ValidationError("power_with_log needs lambda > 1");
        }
        const double L = std::log(lambdas[i]);
        X(i, 0) = 1.0;
        X(i, 1) = L;
        if (p == 3) {
            X(i, 2) = std::log(L);
        }
        y(i) = std::log(values[i]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-12);
    if (qr.rank() < p) {
        throw NumericalError("degenerate design matrix in power-law fit");
    }
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd resid = y - X * beta;
    const double rss = resid.squaredNorm();
    const double tss = (y.array() - y.mean()).square().sum();

    DecayFit fit;
    fit.model = model;
    fit.n = n;
    fit.intercept = beta(0);
    fit.slope = beta(1);
    fit.r_squared = tss > 0.0 ? std::clamp(1.0 - rss / tss, 0.0, 1.0) : 1.0;
    fit.max_abs_residual = resid.cwiseAbs().maxCoeff();
    const double dof = static_cast<double>(n) - p;
    const Eigen::MatrixXd cov = (rss / dof) * (X.transpose() * X).inverse();
    fit.slope_stderr = std::sqrt(std::max(cov(1, 1), 0.0));
    if (p == 3) {
        fit.log_coef = beta(2);
        fit.log_coef_stderr = std::sqrt(std::max(cov(2, 2), 0.0));
    }
    return fit;
}

DecayFit fit_power_law(const std::vector<SweepRow>& rows, FitModel model) {
    std::vector<double> lam, val;
    for (const auto& r : rows) {
        if (r.ok) {
            lam.push_back(r.lambda);
            val.push_back(r.quantity);
        }
    }
    if (lam.size() < 5) {
        throw ValidationError("fit needs at least 5 successful rows, got " + std::to_string(lam.size()));
    }
    return fit_power_law(lam, val, model);
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

}  // namespace

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    os << "lambda,quantity,mode,ok,grid_nt,grid_nuv,eps,delta,seed,iterations,error\n";
    for (const auto& r : rows) {
        os << format_double(r.lambda) << ',' << (r.ok ? format_double(r.quantity) : std::string("nan")) << ','
           << to_string(r.mode) << ',' << (r.ok ? 1 : 0) << ',' << r.grid_nt << ',' << r.grid_nuv << ','
           << format_double(r.eps) << ',' << format_double(r.delta) << ',' << r.seed << ',' << r.iterations << ','
           << csv_escape(r.error) << '\n';
    }
}

std::vector<SweepRow> read_sweep_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("lambda,quantity,mode", 0) != 0) {
        throw ValidationError("sweep CSV must start with header lambda,quantity,mode,...");
    }
    std::vector<SweepRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto c = split_csv_line(line);
        if (c.size() < 10) {
            throw ValidationError("sweep CSV row has too few columns");
        }
        SweepRow r;
        r.lambda = parse_double(c[0]);
        r.mode = parse_sweep_mode(c[2]);
        r.ok = c[3] == "1";
        r.quantity = r.ok ? parse_double(c[1]) : 0.0;
        r.grid_nt = static_cast<std::size_t>(parse_double(c[4]));
        r.grid_nuv = static_cast<std::size_t>(parse_double(c[5]));
        r.eps = parse_double(c[6]);
        r.delta = parse_double(c[7]);
        r.seed = std::stoull(c[8]);
        r.iterations = static_cast<int>(parse_double(c[9]));
        if (c.size() > 10) {
            std::string err = c[10];
            for (std::size_t k = 11; k < c.size(); ++k) err += "," + c[k];
            if (err.size() >= 2 && err.front() == '"' && err.back() == '"') err = err.substr(1, err.size() - 2);
            r.error = err;
        }
        rows.push_back(r);
    }
    return rows;
}

void write_witness_csv(std::ostream& os, const std::vector<WitnessRow>& rows) {
    os << "lambda,norm_f,norm_Tf,quotient,pointwise_min,grid_nt,grid_nuv,ok,error\n";
    for (const auto& w : rows) {
        const auto& r = w.record;
        auto num = [&](double x) { return w.ok ? format_double(x) : std::string("nan"); };
        os << format_double(r.lambda) << ',' << num(r.norm_f) << ',' << num(r.norm_Tf) << ',' << num(r.quotient)
           << ',' << num(r.pointwise_min) << ',' << r.grid_nt << ',' << r.grid_nuv << ',' << (w.ok ? 1 : 0) << ','
           << csv_escape(w.error) << '\n';
    }
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<':
                out += "&lt;";
                break;
            case '>':
                out += "&gt;";
                break;
            case '&':
                out += "&amp;";
                break;
            case '"':
                out += "&quot;";
                break;
            default:
                out += c;
        }
    }
    return out;
}

std::string fmt(double x, int prec = 4) {
    std::ostringstream ss;
    ss.precision(prec);
    ss << x;
    return ss.str();
}

}  // namespace

std::string render_svg(const std::vector<SweepRow>& rows, const std::optional<DecayFit>& fit, const std::string& title) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) {
        if (r.ok && r.lambda > 0.0 && r.quantity > 0.0) {
            pts.emplace_back(std::log10(r.lambda), std::log10(r.quantity));
        }
    }
    constexpr double W = 640, H = 420, left = 70, right = 20, top = 40, bottom = 50;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!pts.empty()) {
        x0 = x1 = pts[0].first;
        y0 = y1 = pts[0].second;
        for (const auto& [x, y] : pts) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (x1 - x0 < 1e-9) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (y1 - y0 < 1e-9) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double padx = 0.05 * (x1 - x0), pady = 0.08 * (y1 - y0);
    x0 -= padx;
    x1 += padx;
    y0 -= pady;
    y1 += pady;
    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
    auto sy = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
        << W << ' ' << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
        << xml_escape(title) << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << W - left - right << "\" height=\""
        << H - top - bottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0;
        const double yv = y0 + (y1 - y0) * k / 4.0;
        svg << "<text x=\"" << sx(xv) << "\" y=\"" << H - bottom + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" << fmt(xv, 3)
            << "</text>\n";
        svg << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << fmt(yv, 3) << "</text>\n";
    }
    svg << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">lambda</text>\n";
    if (fit) {
        const double ln10 = std::log(10.0);
        auto model_y = [&](double xl) {
            const double L = xl * ln10;
            double v = fit->intercept + fit->slope * L;
            if (fit->model == FitModel::PowerWithLog) v += fit->log_coef * std::log(L);
            return v / ln10;
        };
        svg << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
        for (int k = 0; k <= 40; ++k) {
            const double xl = x0 + padx + (x1 - x0 - 2 * padx) * k / 40.0;
            svg << sx(xl) << ',' << sy(model_y(xl)) << ' ';
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << left + 10 << "\" y=\"" << top + 18
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#c0392b\">slope " << fmt(fit->slope, 5)
            << " (r2 " << fmt(fit->r_squared, 6) << ")</text>\n";
    }
    for (const auto& [x, y] : pts) {
        svg << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3.5\" fill=\"#2c3e50\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace oscidecay
