#pragma once

// Normal operator T*T for separable phases and tensor-product amplitudes.
// With Phi = chi(u) chi(v) chi(t) and no u*v term, the (u,v) integrals of
// T*T factor exactly:
//   K(t,t') = chi(t) chi(t') F_u(t,t') F_v(t,t'),
//   F_u(t,t') = int chi(u)^2 e^{i lambda D (p u (t'^2 - t^2) + alpha u^2 (t' - t))} du,
// and likewise for v with (q, gamma). The t axis is a uniform grid, so each
// factor is one of
//   Const     p = alpha = 0        A(0)
//   Band      alpha = 0            A(lambda D p (t'^2 - t^2)), negligible away from t'^2 = t^2
//   Toeplitz  p = 0                B(lambda D alpha (t' - t)), depends on j - i only
//   Mixed     both non-zero        low-rank sum over u nodes
// with A(xi) = int chi^2 cos(u xi) du and B(eta) = int chi^2 e^{i eta u^2} du.

#include <memory>
#include <vector>

#include "oscidecay/normest.hpp"

namespace oscidecay {

/// Tabulated cosine transform A of chi^2 and direct or asymptotic B.
class CutoffTransforms {
  public:
    CutoffTransforms(double r0, double r, double step, double xi_max);

    double r0() const { return r0_; }
    double r() const { return r_; }
    double xi_max() const { return xi_max_; }

    /// Cubic Hermite interpolation of A; zero beyond xi_max.
    double A(double xi) const;
    /// Quadrature value of A and of its derivative.
    double A_direct(double xi) const;
    double A_prime_direct(double xi) const;
    /// Quadrature for |eta| <= threshold, stationary-phase limit beyond.
    std::complex<double> B(double eta, double threshold) const;
    std::complex<double> B_direct(double eta) const;

  private:
    double r0_, r_, step_, xi_max_;
    std::vector<double> a_, da_;
};

/// Shared, cached tables for the given cutoff.
std::shared_ptr<const CutoffTransforms> cutoff_transforms(double r0, double r, double step, double xi_max);

enum class FactorKind { Const, Band, Toeplitz, Mixed };
enum class GramStrategy { Banded, Dense };

const char* to_string(FactorKind k);
const char* to_string(GramStrategy s);

struct GramConfig {
    double t_density = 5.0;          // t nodes per unit of lambda D times the phase scale
    int t_min = 256;
    double lowrank_oversample = 1.2;  // u nodes relative to the Nyquist count of a Mixed factor
    int lowrank_min = 64;
    double band_cutoff = 400.0;      // |A(xi)| is treated as zero beyond this
    double table_step = 0.01;
    double asymptotic_threshold = 400.0;
    double max_dense_bytes = 2.5e9;
    double max_setup_flops = 2e13;
    double max_apply_flops = 5e10;
};

class GramOperator {
  public:
    GramOperator(const PhaseSpec& spec, double lambda, const Amplitude& phi, const GramConfig& cfg = {});

    /// True when the factored kernel applies (separable phase, tensor amplitude).
    static bool supports(const PhaseSpec& spec, const Amplitude& phi);

    std::size_t size() const { return nodes_.size(); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }
    GramStrategy strategy() const { return strategy_; }
    FactorKind u_kind() const { return axes_[0].kind; }
    FactorKind v_kind() const { return axes_[1].kind; }
    std::size_t lowrank_nodes() const { return lowrank_nodes_; }
    double apply_flops() const { return apply_flops_; }
    double setup_flops() const { return setup_flops_; }

    /// K(t_i, t_j) evaluated from the factor formulas (Mixed factors by direct sum).
    std::complex<double> entry(std::size_t i, std::size_t j) const;

    /// y = K W x: the normal operator in the t-weighted inner product.
    void apply(const std::vector<std::complex<double>>& x, std::vector<std::complex<double>>& y) const;
    void apply_serial(const std::vector<std::complex<double>>& x, std::vector<std::complex<double>>& y) const;

  private:
    struct Axis {
        FactorKind kind = FactorKind::Const;
        double lin = 0.0;   // lambda D times the t^2 coefficient
        double quad = 0.0;  // lambda D times the t coefficient
        std::vector<std::complex<double>> toeplitz;  // B at offsets j - i + n - 1
        std::vector<double> lr_nodes, lr_weights;   // Mixed: u nodes, weights * chi^2
    };
    struct Range {
        std::size_t lo1, hi1, lo2, hi2;  // [lo, hi) pairs; second may be empty
    };

    std::complex<double> factor(const Axis& ax, std::size_t i, std::size_t j) const;
    void build_banded();
    void build_dense();
    void accumulate_lowrank(const Axis& ax, std::vector<std::complex<double>>& c) const;

    double h_ = 0.0;
    std::vector<double> nodes_, weights_, chi_;
    Axis axes_[2];
    std::shared_ptr<const CutoffTransforms> tr_;
    GramConfig cfg_;
    GramStrategy strategy_ = GramStrategy::Banded;
    std::size_t lowrank_nodes_ = 0;
    double apply_flops_ = 0.0;
    double setup_flops_ = 0.0;
    int band_axis_ = -1;
    std::vector<Range> ranges_;
    std::vector<std::complex<double>> dense_;  // row-major N x N, Dense strategy only
};

/// Operator norm through the factored normal operator on a uniform t grid.
NormResult gram_operator_norm(const PhaseSpec& spec, double lambda, const Amplitude& phi, const GramConfig& gcfg = {},
                              const PowerConfig& pcfg = {});

}  // namespace oscidecay
