#pragma once

// Geometric lambda sweeps and log-log power-law fits.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oscidecay/gram.hpp"
#include "oscidecay/normest.hpp"

namespace oscidecay {

enum class SweepMode { Rayleigh, Opnorm, NormF, Pointwise, Image };

const char* to_string(SweepMode m);
SweepMode parse_sweep_mode(const std::string& s);

struct SweepRow {
    double lambda = 0.0;
    double quantity = 0.0;
    SweepMode mode = SweepMode::Rayleigh;
    bool ok = true;
    std::string error;
    std::size_t grid_nt = 0;
    std::size_t grid_nuv = 0;
    double eps = 0.0;
    double delta = 0.0;
    std::uint64_t seed = 0;
    int iterations = 0;
};

struct SweepConfig {
    double eps = 0.0;  // <= 0: calibrate from delta
    double delta = 0.5;
    std::uint64_t seed = 0x5EED;
    WitnessConfig witness;
    GramConfig gram;
    PowerConfig power;
    QuadConfig quad;        // t grid of the direct route
    int direct_base_n = 4;  // uv panel order of the direct route
    std::size_t direct_max_points = 4'000'000;
};

/// count points from lo to hi, equispaced in log lambda. Needs count >= 2 and lo < hi.
std::vector<double> geometric_lambdas(double lo, double hi, int count);

/// eps from cfg, calibrated when cfg.eps <= 0.
double resolve_eps(const SweepConfig& cfg);

struct WitnessRow {
    WitnessRecord record;
    bool ok = true;
    std::string error;
};

/// witness_chain for spec at each lambda; failures are recorded, not thrown.
std::vector<WitnessRow> witness_sweep(const PhaseSpec& spec, const std::vector<double>& lambdas,
                                      const SweepConfig& cfg);

/// Rows of a single witness quantity.
std::vector<SweepRow> rows_from_witness(const std::vector<WitnessRow>& rows, SweepMode mode, const SweepConfig& cfg);

/// Operator norm at one lambda: factored normal operator when the phase allows,
/// direct discretization otherwise.
NormResult estimate_operator_norm(const PhaseSpec& spec, double lambda, const SweepConfig& cfg);

/// One row per lambda. lambdas must be strictly increasing with at least 5 entries.
std::vector<SweepRow> sweep(const PhaseSpec& spec, const std::vector<double>& lambdas, SweepMode mode,
                            const SweepConfig& cfg);

enum class FitModel { PurePower, PowerWithLog };

const char* to_string(FitModel m);

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_stderr = 0.0;
    FitModel model = FitModel::PurePower;
    double log_coef = 0.0;  // coefficient of log log lambda, PowerWithLog only
    double log_coef_stderr = 0.0;
    double max_abs_residual = 0.0;
    std::size_t n = 0;
};

void to_json(nlohmann::json& j, const DecayFit& f);

/// OLS of log y on log lambda (plus log log lambda for PowerWithLog).
DecayFit fit_power_law(const std::vector<double>& lambdas, const std::vector<double>& values, FitModel model);

/// Fit over the successful rows; needs at least 5.
DecayFit fit_power_law(const std::vector<SweepRow>& rows, FitModel model);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& is);

/// CSV with columns lambda,norm_f,norm_Tf,quotient,pointwise_min,grid_nt,grid_nuv,ok,error.
void write_witness_csv(std::ostream& os, const std::vector<WitnessRow>& rows);

/// Log-log chart of the rows with the fitted line.
std::string render_svg(const std::vector<SweepRow>& rows, const std::optional<DecayFit>& fit, const std::string& title);

}  // namespace oscidecay
