#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "oscidecay/decayfit.hpp"
#include "oscidecay/error.hpp"
#include "oscidecay/testfn.hpp"

using namespace oscidecay;

namespace {

std::vector<double> sweep_lambdas() { return geometric_lambdas(1e2, 1e5, 10); }

std::vector<double> map_values(const std::vector<double>& l, double (*f)(double)) {
    std::vector<double> out;
    for (double x : l) out.push_back(f(x));
    return out;
}

}  // namespace

TEST_CASE("geometric lambdas") {
    const auto l = sweep_lambdas();
    REQUIRE(l.size() == 10);
    CHECK(l.front() == 1e2);
    CHECK(l.back() == 1e5);
    CHECK(l[3] == doctest::Approx(1e3).epsilon(1e-14));
    for (std::size_t k = 1; k < l.size(); ++k) CHECK(l[k] / l[k - 1] == doctest::Approx(std::pow(10.0, 1.0 / 3.0)));
    CHECK_THROWS_AS(geometric_lambdas(100, 100, 5), ValidationError);
    CHECK_THROWS_AS(geometric_lambdas(100, 1000, 1), ValidationError);
    CHECK_THROWS_AS(geometric_lambdas(-1, 1000, 5), ValidationError);
}

TEST_CASE("exact power law") {
    const auto l = sweep_lambdas();
    const DecayFit f = fit_power_law(l, map_values(l, [](double x) { return 7.0 * std::pow(x, -0.375); }), FitModel::PurePower);
    CHECK(std::abs(f.slope + 0.375) <= 1e-12);
    CHECK(std::abs(f.intercept - std::log(7.0)) <= 1e-11);
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.slope_stderr <= 1e-12);
    CHECK(f.max_abs_residual <= 1e-12);
    CHECK(f.n == 10);
}

TEST_CASE("lambda^{-1/2} log lambda") {
    const auto l = sweep_lambdas();
    const auto y = map_values(l, [](double x) { return std::pow(x, -0.5) * std::log(x); });
    const DecayFit f = fit_power_law(l, y, FitModel::PurePower);
    CHECK(f.slope > -0.5);
    CHECK(f.slope < -0.35);
    CHECK(std::abs(f.slope - -0.36983371328629466) <= 1e-10);
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < l.size(); ++i) {
        lx.push_back(std::log(l[i]));
        ly.push_back(std::log(y[i]));
    }
    CHECK(std::abs(f.slope - oracle::ols_slope(lx, ly)) <= 1e-12);

    const DecayFit g = fit_power_law(l, y, FitModel::PowerWithLog);
    CHECK(std::abs(g.slope + 0.5) <= 1e-10);
    CHECK(std::abs(g.log_coef - 1.0) <= 1e-9);
    CHECK(g.r_squared == doctest::Approx(1.0));
    const nlohmann::json j = g;
    CHECK(j.at("model") == "power_with_log");
    CHECK(j.contains("log_coef"));
    CHECK_FALSE(nlohmann::json(f).contains("log_coef"));
}

TEST_CASE("constant values") {
    const auto l = sweep_lambdas();
    const DecayFit f = fit_power_law(l, std::vector<double>(l.size(), 3.0), FitModel::PurePower);
    CHECK(std::abs(f.slope) <= 1e-14);
    CHECK(f.r_squared == 1.0);
}

TEST_CASE("equivariance and reordering") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 0.05);
    const auto l = sweep_lambdas();
    std::vector<double> y;
    for (double x : l) y.push_back(std::pow(x, -0.4) * std::exp(n(rng)));
    const DecayFit base = fit_power_law(l, y, FitModel::PurePower);
    for (double k : {1e-3, 0.5, 42.0}) {
        std::vector<double> yk = y;
        for (auto& v : yk) v *= k;
        const DecayFit f = fit_power_law(l, yk, FitModel::PurePower);
        CHECK(std::abs(f.slope - base.slope) <= 1e-12);
        CHECK(std::abs(f.intercept - base.intercept - std::log(k)) <= 1e-12);
    }
    std::vector<std::size_t> idx(l.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> l2, y2;
    for (std::size_t i : idx) {
        l2.push_back(l[i]);
        y2.push_back(y[i]);
    }
    const DecayFit s = fit_power_law(l2, y2, FitModel::PurePower);
    CHECK(std::abs(s.slope - base.slope) <= 1e-12);
    CHECK(std::abs(s.r_squared - base.r_squared) <= 1e-12);
    CHECK(base.r_squared >= 0.0);
    CHECK(base.r_squared <= 1.0);
    CHECK(base.slope_stderr > 0.0);
}

TEST_CASE("fit errors") {
    CHECK_THROWS_AS(fit_power_law({1, 2, 3, 4}, {1, 1, 1, 1}, FitModel::PurePower), ValidationError);
    CHECK_THROWS_AS(fit_power_law({1, 2, 3, 4, 5}, {1, 1, -1, 1, 1}, FitModel::PurePower), ValidationError);
    CHECK_THROWS_AS(fit_power_law({2, 2, 2, 2, 2}, {1, 2, 3, 4, 5}, FitModel::PurePower), NumericalError);
    CHECK_THROWS_AS(fit_power_law({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, FitModel::PowerWithLog), ValidationError);
    std::vector<SweepRow> rows;
    for (int k = 0; k < 6; ++k) {
        SweepRow r;
        r.lambda = 10.0 * (k + 1);
        r.quantity = 1.0 / (k + 1);
        r.ok = k < 4;
        rows.push_back(r);
    }
    CHECK_THROWS_AS(fit_power_law(rows, FitModel::PurePower), ValidationError);
    rows[4].ok = true;
    CHECK(fit_power_law(rows, FitModel::PurePower).slope == doctest::Approx(-1.0));
}

TEST_CASE("sweep validation") {
    const SweepConfig cfg;
    CHECK_THROWS_AS(sweep(normal_form_c(), {}, SweepMode::NormF, cfg), ValidationError);
    CHECK_THROWS_AS(sweep(normal_form_c(), {10, 20, 30, 40}, SweepMode::NormF, cfg), ValidationError);
    CHECK_THROWS_AS(sweep(normal_form_c(), {10, 20, 20, 40, 50}, SweepMode::NormF, cfg), ValidationError);
    CHECK(parse_sweep_mode("norm_f") == SweepMode::NormF);
    CHECK_THROWS_AS(parse_sweep_mode("nope"), ValidationError);
    CHECK(resolve_eps(cfg) == 0.05);
    SweepConfig fixed;
    fixed.eps = 0.1;
    CHECK(resolve_eps(fixed) == 0.1);
}

TEST_CASE("norm_f rows delegate to l2_norm") {
    const auto l = geometric_lambdas(10, 100, 5);
    const SweepConfig cfg;
    const auto rows = sweep(normal_form_c(), l, SweepMode::NormF, cfg);
    REQUIRE(rows.size() == 5);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(rows[k].ok);
        CHECK(rows[k].quantity == l2_norm(make_extremal({0.05, l[k]})));
        CHECK(rows[k].eps == 0.05);
        CHECK(rows[k].delta == 0.5);
        CHECK(rows[k].seed == 0x5EED);
    }
}

TEST_CASE("failed rows are recorded and the sweep continues") {
    SweepConfig cfg;
    cfg.gram.max_dense_bytes = 2e6;
    const auto rows = sweep(make_phase({1, 0}, {1, 0, -1}), {10, 12, 14, 100, 200}, SweepMode::Opnorm, cfg);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].ok);
    CHECK_FALSE(rows[4].ok);
    CHECK(rows[4].error.find("cap") != std::string::npos);
    // witness rows below lambda = 10 fail inside the chain
    const auto w = sweep(normal_form_c(), {5, 10, 11, 12, 13}, SweepMode::Rayleigh, SweepConfig{});
    CHECK_FALSE(w[0].ok);
    CHECK(w[1].ok);
}

TEST_CASE("opnorm via the direct route for a non-separable phase") {
    SweepConfig cfg;
    const PhaseSpec mixed = make_phase({1, 0}, {0, 1, 0});
    const NormResult r = estimate_operator_norm(mixed, 2.0, cfg);
    CHECK(r.value > 0.0);
    cfg.direct_max_points = 10;
    CHECK_THROWS_AS(estimate_operator_norm(mixed, 2.0, cfg), CapExceededError);
}

TEST_CASE("sweep csv round trip and svg") {
    std::vector<SweepRow> rows;
    for (int k = 0; k < 6; ++k) {
        SweepRow r;
        r.lambda = 100.0 * std::pow(2.0, k);
        r.quantity = 0.1 * std::pow(r.lambda, -0.375);
        r.mode = SweepMode::Opnorm;
        r.grid_nt = 500 + k;
        r.eps = 0.05;
        r.delta = 0.5;
        r.seed = 0x5EED;
        r.iterations = 30 + k;
        rows.push_back(r);
    }
    rows[2].ok = false;
    rows[2].error = "cap exceeded, see \"log\"";
    std::stringstream ss;
    write_sweep_csv(ss, rows);
    const std::string text = ss.str();
    CHECK(text.rfind("lambda,quantity,mode,ok,grid_nt,grid_nuv,eps,delta,seed,iterations,error\n", 0) == 0);
    const auto back = read_sweep_csv(ss);
    REQUIRE(back.size() == rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(back[k].lambda == rows[k].lambda);
        CHECK(back[k].ok == rows[k].ok);
        if (rows[k].ok) CHECK(back[k].quantity == rows[k].quantity);
        CHECK(back[k].mode == rows[k].mode);
        CHECK(back[k].grid_nt == rows[k].grid_nt);
        CHECK(back[k].iterations == rows[k].iterations);
        CHECK(back[k].seed == rows[k].seed);
    }
    CHECK(back[2].error == "cap exceeded, see \"\"log\"\"");

    const DecayFit fit = fit_power_law(rows, FitModel::PurePower);
    const std::string svg = render_svg(rows, fit, "opnorm <c>");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("opnorm &lt;c&gt;") != std::string::npos);
    CHECK(svg.find("<circle") != std::string::npos);
    CHECK(render_svg({}, std::nullopt, "empty").find("</svg>") != std::string::npos);

    std::stringstream bad("x,y\n1,2\n");
    CHECK_THROWS_AS(read_sweep_csv(bad), ValidationError);
}

TEST_CASE("witness csv") {
    WitnessRow w;
    w.record = {100.0, 0.05, 0.2, 0.01, 0.05, 0.007, 60, 4000};
    WitnessRow bad;
    bad.record.lambda = 5;
    bad.ok = false;
    bad.error = "lambda too small";
    std::stringstream ss;
    write_witness_csv(ss, {w, bad});
    CHECK(ss.str() ==
          "lambda,norm_f,norm_Tf,quotient,pointwise_min,grid_nt,grid_nuv,ok,error\n"
          "100,0.2,0.01,0.05,0.007,60,4000,1,\n"
          "5,nan,nan,nan,nan,0,0,0,lambda too small\n");
}
