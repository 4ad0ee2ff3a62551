#pragma once

// Operator-norm estimation by weighted power iteration, Rayleigh quotients,
// and the witness chain for the normal form (c).

#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"
#include "oscidecay/kernels.hpp"
#include "oscidecay/quadrature.hpp"

namespace oscidecay {

struct UVGrid {
    Rule u;
    Rule v;
    double v_refine_scale = 1.0;  // lambda^{-1/4}

    std::size_t size() const { return u.size() * v.size(); }
    /// Flattened points, u-major: index a * v.size() + b.
    std::vector<UVPoint> points() const;
    std::vector<double> point_weights() const;
};

struct UVGridOptions {
    double eps = 0.05;
    /// Largest |t| the operator sees; sets the v-oscillation rate 2 lambda |v| t_max
    /// in the outer zone. Non-positive means lambda^{-1/2}(1+eps) (support of f_lambda).
    double t_extent = 0.0;
    double panels_per_oscillation = 4.0;
    std::size_t max_points = 40'000'000;
};

/// Composite GL grid on box^2: u panels of width <= eps/4, v panels of width
/// <= eps lambda^{-1/4}/4 inside |v| <= 2 lambda^{-1/4}, graded by the local
/// oscillation rate outside. base_n is the GL order per panel.
UVGrid build_uv_grid(double lambda, double box, int base_n, const UVGridOptions& opts = {});

struct DiscreteOperator {
    kernels::SplitMatrix matrix;     // rows: (u,v) points, cols: t nodes; entries include t weights
    std::vector<double> row_weights;  // (u,v) quadrature weights
    std::vector<double> col_weights;  // t quadrature weights

    void validate() const;
};

DiscreteOperator discretize(const PhaseSpec& spec, double lambda, const Amplitude& phi, const Rule& t_grid,
                            const UVGrid& uv_grid);

/// Same, from explicit (u,v) points and weights.
DiscreteOperator discretize(const PhaseSpec& spec, double lambda, const Amplitude& phi, const Rule& t_grid,
                            const std::vector<UVPoint>& uv, const std::vector<double>& uv_weights);

struct NormResult {
    double value = 0.0;
    int iterations = 0;
    double residual = 0.0;      // relative change of the estimate at the last step
    double eig_residual = 0.0;  // ||N x - sigma^2 x|| / sigma^2 in the weighted norm
    std::size_t grid_nt = 0;
    std::size_t grid_nuv = 0;
};

void to_json(nlohmann::json& j, const NormResult& r);

struct PowerConfig {
    double tol = 1e-9;
    int max_iter = 5000;
    std::uint64_t seed = 0x5EED;
    int confirm_iterations = 2;
};

/// y = N x for a normal operator N that is self-adjoint in <x,y> = sum w x conj(y).
using NormalApply = std::function<void(const std::vector<cplx>& x, std::vector<cplx>& y)>;

/// Largest singular value sqrt(lambda_max(N)) by power iteration in the weighted inner product.
NormResult power_iteration(const NormalApply& apply, const std::vector<double>& weights, const PowerConfig& cfg);

NormResult operator_norm(const DiscreteOperator& op, double tol = 1e-9, int max_iter = 5000,
                         std::uint64_t seed = 0x5EED);

/// Serial-kernel variant, used as a reference in tests and benchmarks.
NormResult operator_norm_serial(const DiscreteOperator& op, double tol = 1e-9, int max_iter = 5000,
                                std::uint64_t seed = 0x5EED);

/// T_lambda f on the tensor grid (u-major). Uses the factored kernel when the
/// phase is separable and the amplitude is a tensor product.
std::vector<cplx> image_on_grid(const PhaseSpec& spec, double lambda, const Amplitude& phi, const SampledFunction& f,
                                const Rule& u, const Rule& v);

/// sqrt(sum_uv w |T f|^2).
double image_norm(const PhaseSpec& spec, double lambda, const Amplitude& phi, const SampledFunction& f,
                  const UVGrid& grid);

double rayleigh_quotient(const PhaseSpec& spec, double lambda, const Amplitude& phi, const SampledFunction& f,
                         const UVGrid& grid);

struct WitnessRecord {
    double lambda = 0.0;
    double eps = 0.0;
    double norm_f = 0.0;
    double norm_Tf = 0.0;
    double quotient = 0.0;
    double pointwise_min = 0.0;
    std::size_t grid_nt = 0;
    std::size_t grid_nuv = 0;
};

void to_json(nlohmann::json& j, const WitnessRecord& r);

struct WitnessConfig {
    int base_n = 4;
    int window_points = 21;
    UVGridOptions grid;  // eps is overwritten by the witness eps
};

/// Closed window grid: u in 1 -+ eps, v in lambda^{-1/4}(1 -+ eps), n points each.
std::pair<Rule, Rule> window_grid(double lambda, double eps, int n = 21);

/// norm_f, norm_Tf (full box), quotient and window minimum of |T f_lambda| for
/// the normal form (c) with the default amplitude.
WitnessRecord witness_chain(double lambda, double eps, const WitnessConfig& cfg = {});

/// The same quantities for an arbitrary phase and amplitude.
WitnessRecord witness_chain(const PhaseSpec& spec, const Amplitude& phi, double lambda, double eps,
                            const WitnessConfig& cfg = {});

}  // namespace oscidecay
