#include <chrono>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "oscidecay/error.hpp"
#include "oscidecay/gram.hpp"

using namespace oscidecay;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

const PhaseSpec& nondeg() {
    static const PhaseSpec s = make_phase({1, 0}, {1, 0, -1});
    return s;
}

const PhaseSpec& case_c() {
    static const PhaseSpec s = normal_form_c();
    return s;
}

// Independent A(xi) and B(eta) by dense GL over [-2, 2].
double oracle_A(double xi) {
    std::vector<double> x, w;
    oracle::composite(-2, 2, 400, 20, x, w);
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(oracle::chi(x[i]), 2) * std::cos(x[i] * xi);
    return s;
}

std::complex<double> oracle_B(double eta) {
    std::vector<double> x, w;
    oracle::composite(-2, 2, 800, 20, x, w);
    std::complex<double> s = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        s += w[i] * std::pow(oracle::chi(x[i]), 2) * std::polar(1.0, eta * x[i] * x[i]);
    return s;
}

}  // namespace

TEST_CASE("cutoff transforms") {
    const auto tr = cutoff_transforms(1.5, 2.0, 0.01, 600.0);
    CHECK(tr->A(0.0) == doctest::Approx(oracle_A(0.0)).epsilon(1e-12));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-550, 550);
    for (int k = 0; k < 200; ++k) {
        const double xi = d(rng);
        CHECK(std::abs(tr->A(xi) - tr->A_direct(xi)) <= 1e-10);
    }
    for (double xi : {0.3, 7.0, 55.5, 301.0}) {
        CHECK(std::abs(tr->A_direct(xi) - oracle_A(xi)) <= 1e-12);
        const double h = 1e-5;
        CHECK(tr->A_prime_direct(xi) == doctest::Approx((tr->A_direct(xi + h) - tr->A_direct(xi - h)) / (2 * h)).epsilon(1e-6));
    }
    CHECK(tr->A(1e6) == 0.0);
    for (double eta : {-250.0, -3.0, 0.0, 0.7, 90.0, 399.0}) {
        CHECK(std::abs(tr->B(eta, 400.0) - oracle_B(eta)) <= 1e-11);
    }
    // beyond the threshold the stationary-phase value takes over
    for (double eta : {401.0, -650.0, 2000.0}) {
        CHECK(std::abs(tr->B(eta, 400.0) - oracle_B(eta)) <= 1e-9);
        CHECK(std::abs(tr->B(eta, 400.0) - tr->B_direct(eta)) <= 1e-9);
    }
    CHECK(cutoff_transforms(1.5, 2.0, 0.01, 600.0).get() == tr.get());
}

TEST_CASE("supports and strategies") {
    CHECK(GramOperator::supports(normal_form_c(), default_amplitude()));
    CHECK(GramOperator::supports(nondeg(), default_amplitude()));
    CHECK_FALSE(GramOperator::supports(make_phase({1, 0}, {0, 1, 0}), default_amplitude()));
    Amplitude radial{[](double u, double v, double t) { return cutoff(std::hypot(u, v, t), 1.5, 2.0); }};
    CHECK_FALSE(GramOperator::supports(normal_form_c(), radial));
    CHECK_THROWS_AS(GramOperator(make_phase({1, 0}, {0, 1, 0}), 10.0, default_amplitude()), ValidationError);

    const GramOperator c(normal_form_c(), 50.0, default_amplitude());
    CHECK(c.strategy() == GramStrategy::Banded);
    CHECK(c.u_kind() == FactorKind::Band);
    CHECK(c.v_kind() == FactorKind::Toeplitz);
    const GramOperator n(nondeg(), 50.0, default_amplitude());
    CHECK(n.strategy() == GramStrategy::Dense);
    CHECK(n.u_kind() == FactorKind::Mixed);
    CHECK(n.v_kind() == FactorKind::Toeplitz);
    CHECK(n.lowrank_nodes() >= 64);
}

TEST_CASE("entries, apply and symmetry") {
    for (const PhaseSpec* s : {&case_c(), &nondeg()}) {
        const GramOperator g(*s, 30.0, default_amplitude());
        const std::size_t n = g.size();
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (int k = 0; k < 5; ++k) {
            const std::size_t j = pick(rng);
            std::vector<cplx> e(n, 0.0), y(n);
            e[j] = 1.0;
            g.apply(e, y);
            for (int m = 0; m < 20; ++m) {
                const std::size_t i = pick(rng);
                CHECK(std::abs(y[i] - g.entry(i, j) * g.weights()[j]) <= 1e-10 * (1 + std::abs(y[i])));
                CHECK(std::abs(g.entry(i, j) - std::conj(g.entry(j, i))) <= 1e-12);
            }
        }
        std::normal_distribution<double> nd(0, 1);
        std::vector<cplx> x(n), y1(n), y2(n);
        for (auto& z : x) z = cplx(nd(rng), nd(rng));
        g.apply(x, y1);
        g.apply_serial(x, y2);
        double num = 0, den = 0;
        for (std::size_t i = 0; i < n; ++i) {
            num += std::norm(y1[i] - y2[i]);
            den += std::norm(y2[i]);
        }
        CHECK(std::sqrt(num / den) <= 1e-13);
    }
}

TEST_CASE("gram norm against a separable discrete oracle") {
    struct Row {
        const PhaseSpec* s;
        double lambda;
        double p, alpha, q, gamma;
    };
    for (const Row& r : {Row{&case_c(), 10.0, 1, 0, 0, 1}, Row{&case_c(), 20.0, 1, 0, 0, 1},
                         Row{&nondeg(), 10.0, 1, 1, 0, -1}}) {
        const double ref = oracle::separable_gram_norm(r.lambda, r.p, r.alpha, r.q, r.gamma, 36, 36, 36);
        const NormResult got = gram_operator_norm(*r.s, r.lambda, default_amplitude(), {}, {1e-12});
        CHECK(rel(got.value, ref) <= 1e-6);
    }
}

TEST_CASE("frozen gram norms") {
    CHECK(rel(gram_operator_norm(normal_form_c(), 10.0, default_amplitude()).value, 1.854445080016) <= 1e-8);
    CHECK(rel(gram_operator_norm(normal_form_c(), 1e3, default_amplitude()).value, 0.329869056722) <= 1e-8);
    CHECK(rel(gram_operator_norm(nondeg(), 80.0, default_amplitude()).value, 0.712220218697) <= 1e-8);
}

TEST_CASE("gram norm is stable under 1.5x refinement") {
    GramConfig fine;
    fine.t_density *= 1.5;
    fine.lowrank_oversample *= 1.5;
    fine.t_min = 384;
    const PowerConfig tight{1e-12};
    for (double lam : {1e2, 1e3}) {
        const double a = gram_operator_norm(normal_form_c(), lam, default_amplitude(), {}, tight).value;
        const double b = gram_operator_norm(normal_form_c(), lam, default_amplitude(), fine, tight).value;
        CHECK(rel(a, b) <= 1e-6);
    }
    const double a = gram_operator_norm(nondeg(), 160.0, default_amplitude(), {}, tight).value;
    const double b = gram_operator_norm(nondeg(), 160.0, default_amplitude(), fine, tight).value;
    CHECK(rel(a, b) <= 1e-6);
}

TEST_CASE("witness quotient stays below the operator norm") {
    for (double lam : {1e2, 1e3}) {
        const double q = witness_chain(lam, 0.05).quotient;
        CHECK(q <= gram_operator_norm(normal_form_c(), lam, default_amplitude()).value * (1 + 1e-6));
    }
}

TEST_CASE("work caps") {
    const auto t0 = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(GramOperator(nondeg(), 2683.0, default_amplitude()), CapExceededError);
    GramConfig small;
    small.max_dense_bytes = 1e6;
    CHECK_THROWS_AS(GramOperator(nondeg(), 100.0, default_amplitude(), small), CapExceededError);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 1.0);
}
