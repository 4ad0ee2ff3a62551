#include "oscidecay/gram.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <tuple>

#include "oscidecay/error.hpp"

namespace oscidecay {

namespace {

constexpr int kOrder = 10;

// Nodes on [0, r] with weights 2 w chi^2 (the integrands used here are even).
// r0 is a panel edge since chi is not analytic there.
Rule half_line_rule(double r0, double r, int panels) {
    const int inner = std::max(1, static_cast<int>(std::ceil(panels * r0 / r)));
    // the cutoff transition needs resolving whatever the oscillation rate
    const int outer = std::max(16, static_cast<int>(std::ceil(panels * (r - r0) / r)));
    Rule rule = composite_gl(kOrder, 0.0, r0, inner);
    rule.append(composite_gl(kOrder, r0, r, outer));
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const double c = cutoff(rule.nodes[k], r0, r);
        rule.weights[k] *= 2.0 * c * c;
    }
    return rule;
}

}  // namespace

CutoffTransforms::CutoffTransforms(double r0, double r, double step, double xi_max)
    : r0_(r0), r_(r), step_(step), xi_max_(xi_max) {
    if (!(r0 > 0.0 && r0 < r) || !(step > 0.0) || !(xi_max > step)) {
        throw ValidationError("cutoff transform table: bad parameters");
    }
    const auto m_count = static_cast<std::size_t>(std::ceil(xi_max / step)) + 2;
    a_.assign(m_count, 0.0);
    da_.assign(m_count, 0.0);
    const int panels = 8 + static_cast<int>(std::ceil(4.0 * r * (m_count * step) / (2.0 * std::numbers::pi)));
    const Rule rule = half_line_rule(r0, r, panels);

    // Phasors advance by e^{i u step} per table entry; each block restarts from
    // an exact value so rounding does not accumulate.
    constexpr std::size_t kBlock = 512;
    const auto nblocks = static_cast<std::ptrdiff_t>((m_count + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
        const std::size_t m0 = static_cast<std::size_t>(b) * kBlock;
        const std::size_t m1 = std::min(m_count, m0 + kBlock);
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const double u = rule.nodes[k];
            const double w = rule.weights[k];
            std::complex<double> z = std::polar(1.0, u * step * static_cast<double>(m0));
            const std::complex<double> rot = std::polar(1.0, u * step);
            for (std::size_t m = m0; m < m1; ++m) {
                a_[m] += w * z.real();
                da_[m] -= w * u * z.imag();
                z *= rot;
            }
        }
    }
}

double CutoffTransforms::A(double xi) const {
    const double a = std::abs(xi);
    if (a >= xi_max_) {
        return 0.0;
    }
    const double pos = a / step_;
    const auto m = static_cast<std::size_t>(pos);
    const double s = pos - static_cast<double>(m);
    const double s2 = s * s, s3 = s2 * s;
    return (2.0 * s3 - 3.0 * s2 + 1.0) * a_[m] + (s3 - 2.0 * s2 + s) * step_ * da_[m] +
           (-2.0 * s3 + 3.0 * s2) * a_[m + 1] + (s3 - s2) * step_ * da_[m + 1];
}

double CutoffTransforms::A_direct(double xi) const {
    const int panels = 8 + static_cast<int>(std::ceil(4.0 * r_ * std::abs(xi) / (2.0 * std::numbers::pi)));
    const Rule rule = half_line_rule(r0_, r_, panels);
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        acc += rule.weights[k] * std::cos(rule.nodes[k] * xi);
    }
    return acc;
}

double CutoffTransforms::A_prime_direct(double xi) const {
    const int panels = 8 + static_cast<int>(std::ceil(4.0 * r_ * std::abs(xi) / (2.0 * std::numbers::pi)));
    const Rule rule = half_line_rule(r0_, r_, panels);
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        acc -= rule.weights[k] * rule.nodes[k] * std::sin(rule.nodes[k] * xi);
    }
    return acc;
}

std::complex<double> CutoffTransforms::B_direct(double eta) const {
    const int panels = 16 + static_cast<int>(std::ceil(4.0 * std::abs(eta) * r_ * r_ / (2.0 * std::numbers::pi)));
    const Rule rule = half_line_rule(r0_, r_, panels);
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        acc += rule.weights[k] * std::polar(1.0, eta * rule.nodes[k] * rule.nodes[k]);
    }
    return acc;
}

std::complex<double> CutoffTransforms::B(double eta, double threshold) const {
    if (std::abs(eta) <= threshold) {
        return B_direct(eta);
    }
    // chi^2 - 1 vanishes to all orders at the stationary point, so the Fresnel
    // value is accurate beyond any power of 1/eta.
    const double mag = std::sqrt(std::numbers::pi / std::abs(eta));
    return std::polar(mag, eta > 0.0 ? std::numbers::pi / 4.0 : -std::numbers::pi / 4.0);
}

std::shared_ptr<const CutoffTransforms> cutoff_transforms(double r0, double r, double step, double xi_max) {
    static std::mutex mu;
    static std::map<std::tuple<double, double, double, double>, std::shared_ptr<const CutoffTransforms>> cache;
    std::lock_guard<std::mutex> lock(mu);
    const auto key = std::make_tuple(r0, r, step, xi_max);
    auto it = cache.find(key);
    if (it != cache.end()) {
        return it->second;
    }
    auto table = std::make_shared<const CutoffTransforms>(r0, r, step, xi_max);
    cache.emplace(key, table);
    return table;
}

const char* to_string(FactorKind k) {
    switch (k) {
        case FactorKind::Const:
            return "const";
        case FactorKind::Band:
            return "band";
        case FactorKind::Toeplitz:
            return "toeplitz";
        case FactorKind::Mixed:
            return "mixed";
    }
    return "unknown";
}

const char* to_string(GramStrategy s) { return s == GramStrategy::Banded ? "banded" : "dense"; }

bool GramOperator::supports(const PhaseSpec& spec, const Amplitude& phi) { return spec.separable() && phi.tensor; }

GramOperator::GramOperator(const PhaseSpec& spec, double lambda, const Amplitude& phi, const GramConfig& cfg)
    : cfg_(cfg) {
    if (!supports(spec, phi)) {
        throw ValidationError("factored normal operator needs a separable phase (no u*v term) and a tensor amplitude");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ValidationError("lambda must be positive and finite");
    }
    const double r = phi.r;
    const double ld = lambda * spec.d_const;

    const double coeffs[2][2] = {{spec.p1.p, spec.p2.alpha}, {spec.p1.q, spec.p2.gamma}};
    for (int k = 0; k < 2; ++k) {
        Axis& ax = axes_[k];
        ax.lin = ld * coeffs[k][0];
        ax.quad = ld * coeffs[k][1];
        if (ax.lin == 0.0 && ax.quad == 0.0) {
            ax.kind = FactorKind::Const;
        } else if (ax.quad == 0.0) {
            ax.kind = FactorKind::Band;
        } else if (ax.lin == 0.0) {
            ax.kind = FactorKind::Toeplitz;
        } else {
            ax.kind = FactorKind::Mixed;
        }
    }

    // Max of |dS/dt| over the box relative to the normal form (c).
    const double scale = (2.0 * (std::abs(spec.p1.p) + std::abs(spec.p1.q)) + std::abs(spec.p2.alpha) +
                          std::abs(spec.p2.gamma)) /
                         3.0 * std::pow(r / 2.0, 3);
    const auto n = static_cast<std::size_t>(
        std::max<double>(cfg.t_min, std::ceil(cfg.t_density * ld * scale)));
    h_ = 2.0 * r / static_cast<double>(n + 1);
    nodes_.resize(n);
    weights_.assign(n, h_);
    chi_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        nodes_[j] = -r + static_cast<double>(j + 1) * h_;
        chi_[j] = phi.factor(nodes_[j]);
    }

    // Band arguments never exceed |lin| R^2; round the table length up to a
    // power of two so nearby lambdas share one cached table.
    const double reach = r * r * std::max(std::abs(axes_[0].lin), std::abs(axes_[1].lin));
    const double xi_max = std::min(1.05 * cfg.band_cutoff + 1.0, std::exp2(std::ceil(std::log2(reach + 2.0))));
    tr_ = cutoff_transforms(phi.r0, phi.r, cfg.table_step, xi_max);

    int mixed = 0;
    for (Axis& ax : axes_) {
        if (ax.kind == FactorKind::Toeplitz) {
            ax.toeplitz.resize(2 * n - 1);
            const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
            for (std::ptrdiff_t k = 0; k < nn; ++k) {
                const auto z = tr_->B(ax.quad * h_ * static_cast<double>(k), cfg.asymptotic_threshold);
                ax.toeplitz[n - 1 + k] = z;
                ax.toeplitz[n - 1 - k] = std::conj(z);
            }
        } else if (ax.kind == FactorKind::Mixed) {
            ++mixed;
            const double rate = r * r * (std::abs(ax.lin) + 4.0 * std::abs(ax.quad));
            const auto na = static_cast<std::size_t>(std::max<double>(
                cfg.lowrank_min, std::ceil(cfg.lowrank_oversample * 2.0 * r * rate / (2.0 * std::numbers::pi))));
            const double hu = 2.0 * r / static_cast<double>(na + 1);
            ax.lr_nodes.resize(na);
            ax.lr_weights.resize(na);
            for (std::size_t a = 0; a < na; ++a) {
                const double u = -r + static_cast<double>(a + 1) * hu;
                const double c = phi.factor(u);
                ax.lr_nodes[a] = u;
                ax.lr_weights[a] = hu * c * c;
            }
            lowrank_nodes_ += na;
        }
    }

    const bool has_band = axes_[0].kind == FactorKind::Band || axes_[1].kind == FactorKind::Band;
    strategy_ = (mixed == 0 && has_band) ? GramStrategy::Banded : GramStrategy::Dense;
    if (strategy_ == GramStrategy::Banded) {
        build_banded();
    } else {
        const double nd = static_cast<double>(n);
        const double bytes = 16.0 * nd * nd * (mixed > 1 ? 2.0 : 1.0);
        setup_flops_ = 4.0 * nd * nd * static_cast<double>(lowrank_nodes_);
        apply_flops_ = 8.0 * nd * nd;
        if (bytes > cfg.max_dense_bytes || setup_flops_ > cfg.max_setup_flops) {
            std::ostringstream msg;
            msg << "dense normal operator at lambda=" << lambda << " needs " << bytes / 1e9 << " GB and "
                << setup_flops_ << " flops to assemble (caps " << cfg.max_dense_bytes / 1e9 << " GB, "
                << cfg.max_setup_flops << "); lower lambda or raise the caps";
            throw CapExceededError(msg.str());
        }
        build_dense();
    }
}

void GramOperator::build_banded() {
    const std::size_t n = nodes_.size();
    band_axis_ = axes_[0].kind == FactorKind::Band ? 0 : 1;
    const double limit = cfg_.band_cutoff / std::abs(axes_[band_axis_].lin);
    const double r = -nodes_.front() + h_;
    auto first_at_least = [&](double x) {
        const double pos = std::ceil((x + r) / h_ - 1.0 - 1e-9);
        return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n)));
    };
    auto past_at_most = [&](double x) {
        const double pos = std::floor((x + r) / h_ - 1.0 + 1e-9) + 1.0;
        return static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n)));
    };
    ranges_.resize(n);
    double nnz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t2 = nodes_[i] * nodes_[i];
        const double hi = std::sqrt(t2 + limit);
        Range rg{0, 0, 0, 0};
        if (t2 - limit <= 0.0) {
            rg.lo1 = first_at_least(-hi);
            rg.hi1 = past_at_most(hi);
        } else {
            const double lo = std::sqrt(t2 - limit);
            rg.lo1 = first_at_least(-hi);
            rg.hi1 = past_at_most(-lo);
            rg.lo2 = first_at_least(lo);
            rg.hi2 = past_at_most(hi);
        }
        rg.hi1 = std::max(rg.hi1, rg.lo1);
        rg.hi2 = std::max(rg.hi2, rg.lo2);
        nnz += static_cast<double>((rg.hi1 - rg.lo1) + (rg.hi2 - rg.lo2));
        ranges_[i] = rg;
    }
    apply_flops_ = 40.0 * nnz;
    if (apply_flops_ > cfg_.max_apply_flops) {
        std::ostringstream msg;
        msg << "banded normal operator needs " << apply_flops_ << " flops per product (cap " << cfg_.max_apply_flops
            << ")";
        throw CapExceededError(msg.str());
    }
}

void GramOperator::accumulate_lowrank(const Axis& ax, std::vector<std::complex<double>>& c) const {
    const std::size_t n = nodes_.size();
    const std::size_t na = ax.lr_nodes.size();
    constexpr std::size_t kChunk = 1024;
    std::vector<std::complex<double>> z(std::min(kChunk, na) * n);
    for (std::size_t a0 = 0; a0 < na; a0 += kChunk) {
        const std::size_t rows = std::min(kChunk, na - a0);
        const auto rr = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < rr; ++k) {
            const double u = ax.lr_nodes[a0 + k];
            const double amp = std::sqrt(ax.lr_weights[a0 + k]);
            const double cl = ax.lin * u, cq = ax.quad * u * u;
            for (std::size_t j = 0; j < n; ++j) {
                const double t = nodes_[j];
                z[k * n + j] = std::polar(amp, cl * t * t + cq * t);
            }
        }
        const int ni = static_cast<int>(n);
        cblas_zherk(CblasRowMajor, CblasUpper, CblasConjTrans, ni, static_cast<int>(rows), 1.0, z.data(), ni,
                    a0 == 0 ? 0.0 : 1.0, c.data(), ni);
    }
}

void GramOperator::build_dense() {
    const std::size_t n = nodes_.size();
    dense_.assign(n * n, std::complex<double>(1.0, 0.0));
    std::vector<std::complex<double>> second;
    bool first_mixed = true;
    for (const Axis& ax : axes_) {
        if (ax.kind != FactorKind::Mixed) {
            continue;
        }
        if (first_mixed) {
            accumulate_lowrank(ax, dense_);
            first_mixed = false;
        } else {
            second.assign(n * n, {});
            accumulate_lowrank(ax, second);
        }
    }
    const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t ii = 0; ii < nn; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        for (std::size_t j = i; j < n; ++j) {
            std::complex<double> v = dense_[i * n + j];
            if (!second.empty()) {
                v *= second[i * n + j];
            }
            for (const Axis& ax : axes_) {
                if (ax.kind != FactorKind::Mixed) {
                    v *= factor(ax, i, j);
                }
            }
            dense_[i * n + j] = chi_[i] * chi_[j] * v;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        dense_[i * n + i] = dense_[i * n + i].real();
        for (std::size_t j = i + 1; j < n; ++j) {
            dense_[j * n + i] = std::conj(dense_[i * n + j]);
        }
    }
}

std::complex<double> GramOperator::factor(const Axis& ax, std::size_t i, std::size_t j) const {
    switch (ax.kind) {
        case FactorKind::Const:
            return tr_->A(0.0);
        case FactorKind::Band:
            return tr_->A(ax.lin * (nodes_[j] * nodes_[j] - nodes_[i] * nodes_[i]));
        case FactorKind::Toeplitz:
            return ax.toeplitz[nodes_.size() - 1 + j - i];
        case FactorKind::Mixed: {
            const double d2 = nodes_[j] * nodes_[j] - nodes_[i] * nodes_[i];
            const double d1 = nodes_[j] - nodes_[i];
            std::complex<double> acc = 0.0;
            for (std::size_t a = 0; a < ax.lr_nodes.size(); ++a) {
                const double u = ax.lr_nodes[a];
                acc += ax.lr_weights[a] * std::polar(1.0, ax.lin * u * d2 + ax.quad * u * u * d1);
            }
            return acc;
        }
    }
    return 0.0;
}

std::complex<double> GramOperator::entry(std::size_t i, std::size_t j) const {
    return chi_[i] * chi_[j] * factor(axes_[0], i, j) * factor(axes_[1], i, j);
}

void GramOperator::apply_serial(const std::vector<std::complex<double>>& x,
                                std::vector<std::complex<double>>& y) const {
    const std::size_t n = nodes_.size();
    y.assign(n, {});
    if (strategy_ == GramStrategy::Dense) {
        for (std::size_t i = 0; i < n; ++i) {
            std::complex<double> s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                s += dense_[i * n + j] * x[j];
            }
            y[i] = h_ * s;
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::complex<double> s = 0.0;
        const Range& rg = ranges_[i];
        for (std::size_t j = rg.lo1; j < rg.hi1; ++j) s += entry(i, j) * x[j];
        for (std::size_t j = rg.lo2; j < rg.hi2; ++j) s += entry(i, j) * x[j];
        y[i] = h_ * s;
    }
}

void GramOperator::apply(const std::vector<std::complex<double>>& x, std::vector<std::complex<double>>& y) const {
    const std::size_t n = nodes_.size();
    y.assign(n, {});
    const auto nn = static_cast<std::ptrdiff_t>(n);
    if (strategy_ == GramStrategy::Dense) {
        std::vector<double> xr(n), xi(n);
        for (std::size_t j = 0; j < n; ++j) {
            xr[j] = x[j].real();
            xi[j] = x[j].imag();
        }
        const double* base = reinterpret_cast<const double*>(dense_.data());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < nn; ++i) {
            const double* row = base + 2 * static_cast<std::size_t>(i) * n;
            double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
            for (std::size_t j = 0; j < n; ++j) {
                const double kr = row[2 * j], ki = row[2 * j + 1];
                sr += kr * xr[j] - ki * xi[j];
                si += kr * xi[j] + ki * xr[j];
            }
            y[i] = {h_ * sr, h_ * si};
        }
        return;
    }

    // Banded: chi_j x_j premultiplied, factors specialised on the axis kinds.
    std::vector<std::complex<double>> xc(n);
    for (std::size_t j = 0; j < n; ++j) {
        xc[j] = h_ * chi_[j] * x[j];
    }
    const Axis& band = axes_[band_axis_];
    const Axis& other = axes_[1 - band_axis_];
    const CutoffTransforms& tr = *tr_;
    const std::complex<double> a0 = tr.A(0.0);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t ii = 0; ii < nn; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double ti2 = nodes_[i] * nodes_[i];
        std::complex<double> s = 0.0;
        auto run = [&](std::size_t lo, std::size_t hi) {
            for (std::size_t j = lo; j < hi; ++j) {
                const double fa = tr.A(band.lin * (nodes_[j] * nodes_[j] - ti2));
                std::complex<double> fo;
                switch (other.kind) {
                    case FactorKind::Toeplitz:
                        fo = other.toeplitz[n - 1 + j - i];
                        break;
                    case FactorKind::Band:
                        fo = tr.A(other.lin * (nodes_[j] * nodes_[j] - ti2));
                        break;
                    default:
                        fo = a0;
                        break;
                }
                s += fa * fo * xc[j];
            }
        };
        run(ranges_[i].lo1, ranges_[i].hi1);
        run(ranges_[i].lo2, ranges_[i].hi2);
        y[i] = chi_[i] * s;
    }
}

NormResult gram_operator_norm(const PhaseSpec& spec, double lambda, const Amplitude& phi, const GramConfig& gcfg,
                              const PowerConfig& pcfg) {
    const GramOperator op(spec, lambda, phi, gcfg);
    auto apply = [&](const std::vector<std::complex<double>>& x, std::vector<std::complex<double>>& y) {
        op.apply(x, y);
    };
    NormResult r = power_iteration(apply, op.weights(), pcfg);
    r.grid_nt = op.size();
    r.grid_nuv = op.lowrank_nodes();
    return r;
}

}  // namespace oscidecay
