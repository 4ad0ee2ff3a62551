#include <cmath>
#include <random>

#include "doctest.h"
#include "oscidecay/error.hpp"
#include "oscidecay/phase.hpp"

using namespace oscidecay;

namespace {

double nf_error(const PhaseSpec& s, double u, double v, double t) {
    const double up = s.transform.a11 * u + s.transform.a12 * v;
    const double vp = s.transform.a21 * u + s.transform.a22 * v;
    const double nf = eval_normal_form(s, up, vp, s.t_sign * t);
    return std::abs(eval_phase(s, u, v, t) - nf) / (1.0 + std::abs(nf));
}

Mat2 random_invertible(std::mt19937_64& rng, double max_cond) {
    std::normal_distribution<double> n(0.0, 1.0);
    while (true) {
        Mat2 m{n(rng), n(rng), n(rng), n(rng)};
        const double fro2 = m.a11 * m.a11 + m.a12 * m.a12 + m.a21 * m.a21 + m.a22 * m.a22;
        const double det = std::abs(m.det());
        if (det == 0.0) continue;
        // sigma_max/sigma_min from the 2x2 invariants
        const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
        const double smax = std::sqrt((fro2 + disc) / 2.0), smin = std::sqrt((fro2 - disc) / 2.0);
        if (smin > 0.0 && smax / smin <= max_cond) return m;
    }
}

}  // namespace

TEST_CASE("eval_phase examples") {
    CHECK(eval_phase(normal_form_c(), 1, 1, 1) == 2.0);
    const PhaseSpec generic = make_phase({0.3, -1.7}, {2.0, 0.5, -1.0});
    CHECK(eval_phase(generic, 1.2, -0.4, 0.0) == 0.0);
    CHECK(eval_phase(normal_form_c(), 2, 3, 0.5) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("discriminant examples") {
    CHECK(discriminant({0, 0, 1}) == 0.0);
    CHECK(discriminant({1, 0, -1}) == 4.0);
    CHECK(discriminant({1, 2, 1}) == 0.0);
}

TEST_CASE("divides examples") {
    CHECK(divides({1, 0}, {1, 0, 0}));
    CHECK_FALSE(divides({1, 0}, {0, 0, 1}));
    CHECK(divides({1, 1}, {1, 0, -1}));
    CHECK_THROWS_AS(divides({0, 0}, {1, 0, 0}), ValidationError);
}

TEST_CASE("classify examples") {
    CHECK(classify({1, 0}, {0, 0, 1}).tag == PhaseTag::DegenerateC);
    const PhaseClass b = classify({1, 0}, {1, 0, 0});
    CHECK(b.tag == PhaseTag::DegenerateB);
    CHECK(b.a == 1.0);
    CHECK(classify({1, 0}, {0, 1, 0}).tag == PhaseTag::NonDegenerate);
}

TEST_CASE("classify rejects zero forms") {
    try {
        classify({0, 0}, {0, 0, 1});
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()) == "P1 must be non-zero");
    }
    CHECK_THROWS_AS(classify({1, 0}, {0, 0, 0}), ValidationError);
    CHECK_THROWS_AS(classify({NAN, 0}, {0, 0, 1}), ValidationError);
}

TEST_CASE("reduce_to_normal_form examples") {
    SUBCASE("already normal form (c)") {
        const PhaseSpec s = reduce_to_normal_form({1, 0}, {0, 0, 1});
        CHECK(s.klass.tag == PhaseTag::DegenerateC);
        CHECK(s.transform.a11 == 1.0);
        CHECK(s.transform.a12 == 0.0);
        CHECK(s.transform.a21 == 0.0);
        CHECK(s.transform.a22 == 1.0);
        CHECK(s.d_const == 1.0);
        CHECK(s.t_sign == 1);
    }
    SUBCASE("P1 = u+v, P2 = (u-v)^2") {
        const PhaseSpec s = reduce_to_normal_form({1, 1}, {1, -2, 1});
        CHECK(s.klass.tag == PhaseTag::DegenerateC);
        CHECK(s.transform.a11 == doctest::Approx(1.0));
        CHECK(s.transform.a12 == doctest::Approx(1.0));
        CHECK(s.transform.a21 == doctest::Approx(1.0));
        CHECK(s.transform.a22 == doctest::Approx(-1.0));
        // random-point oracle: pulled-back phase equals u' t^2 + v'^2 t
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> d(-2, 2);
        for (int k = 0; k < 1000; ++k) {
            const double u = d(rng), v = d(rng), t = d(rng);
            const double up = u + v, vp = u - v;
            CHECK(std::abs(eval_phase(s, u, v, t) - (up * t * t + vp * vp * t)) <= 1e-12 * (1 + std::abs(up * t * t + vp * vp * t)));
        }
    }
    SUBCASE("P1 = u, P2 = 4u^2") {
        const PhaseSpec s = reduce_to_normal_form({1, 0}, {4, 0, 0});
        CHECK(s.klass.tag == PhaseTag::DegenerateB);
        CHECK(s.klass.a == 4.0);
        CHECK(s.transform.a11 == 1.0);
        CHECK(s.transform.a12 == 0.0);
        CHECK(s.transform.a21 == 0.0);
        CHECK(s.transform.a22 == 1.0);
    }
    SUBCASE("negative square needs t -> -t") {
        const PhaseSpec s = reduce_to_normal_form({1, 0}, {0, 0, -3});
        CHECK(s.t_sign == -1);
        CHECK(nf_error(s, 0.7, -1.1, 0.4) <= 1e-14);
    }
    CHECK_THROWS_AS(reduce_to_normal_form({1, 0}, {0, 1, 0}), ValidationError);
}

TEST_CASE("normal form reproduces the phase on random points") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> box(-2, 2);
    for (int trial = 0; trial < 50; ++trial) {
        const LinearForm p1{n(rng), n(rng)};
        const LinearForm l{n(rng), n(rng)};
        const double k = n(rng);
        const QuadraticForm sq{k * l.p * l.p, 2 * k * l.p * l.q, k * l.q * l.q};
        const QuadraticForm sb{k * p1.p * p1.p, 2 * k * p1.p * p1.q, k * p1.q * p1.q};
        for (const PhaseSpec& s : {reduce_to_normal_form(p1, sq), reduce_to_normal_form(p1, sb)}) {
            CHECK(s.transform.det() != 0.0);
            double worst = 0.0;
            for (int k2 = 0; k2 < 1000; ++k2) {
                worst = std::max(worst, nf_error(s, box(rng), box(rng), box(rng)));
            }
            CHECK(worst <= 1e-9);
        }
    }
}

TEST_CASE("classification is invariant under invertible substitutions") {
    std::mt19937_64 rng(3);
    const std::pair<LinearForm, QuadraticForm> bases[] = {
        {{1, 0}, {0, 0, 1}}, {{1, 0}, {1, 0, 0}}, {{1, 0}, {0, 1, 0}}, {{1, 0}, {1, 0, -1}}, {{1, 1}, {1, -2, 1}}};
    for (int k = 0; k < 100; ++k) {
        const Mat2 a = random_invertible(rng, 1e3);
        for (const auto& [p1, p2] : bases) {
            CHECK(classify(compose(p1, a), compose(p2, a)).tag == classify(p1, p2).tag);
        }
    }
}

TEST_CASE("classification is invariant under scaling") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(0.1, 10);
    for (int k = 0; k < 50; ++k) {
        const double s1 = (k % 2 ? -1 : 1) * d(rng), s2 = (k % 3 ? 1 : -1) * d(rng);
        const LinearForm p1{s1, 0};
        CHECK(classify(p1, {0, 0, s2}).tag == PhaseTag::DegenerateC);
        CHECK(classify(p1, {0, s2, 0}).tag == PhaseTag::NonDegenerate);
        const PhaseClass b = classify({1, 0}, {s2 * 3.0, 0, 0});
        CHECK(b.tag == PhaseTag::DegenerateB);
        CHECK(b.a == doctest::Approx(3.0 * s2).epsilon(1e-14));
    }
}

TEST_CASE("joint degree-3 homogeneity") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> d(-2, 2), sd(0.1, 3);
    const PhaseSpec s = make_phase({0.4, -1.3}, {0.7, 2.1, -0.2});
    for (int k = 0; k < 200; ++k) {
        const double u = d(rng), v = d(rng), t = d(rng), c = sd(rng);
        CHECK(eval_phase(s, c * u, c * v, c * t) == doctest::Approx(c * c * c * eval_phase(s, u, v, t)).epsilon(1e-12));
    }
}

TEST_CASE("d_const knob") {
    const PhaseSpec s = normal_form_c(0.125);
    CHECK(eval_phase(s, 1, 1, 1) == 0.25);
    CHECK_THROWS_AS(normal_form_c().with_d_const(0.0), ValidationError);
    CHECK_THROWS_AS(normal_form_c().with_d_const(1.5), ValidationError);
}

TEST_CASE("json round trip") {
    const nlohmann::json j = {{"p1", LinearForm{1, 0}}, {"p2", QuadraticForm{0, 0, 1}}};
    CHECK(j.dump() == R"({"p1":[1.0,0.0],"p2":[0.0,0.0,1.0]})");
    const auto p1 = j.at("p1").get<LinearForm>();
    const auto p2 = j.at("p2").get<QuadraticForm>();
    CHECK(p2.gamma == 1.0);
    CHECK(p1.p == 1.0);
    const nlohmann::json c = classify({1, 0}, {4, 0, 0});
    CHECK(c.dump() == R"({"a":4.0,"tag":"degenerate_b"})");
    CHECK(c.get<PhaseClass>().a == 4.0);
    CHECK(nlohmann::json(classify({1, 0}, {0, 0, 1})).dump() == R"({"tag":"degenerate_c"})");
    CHECK_THROWS_AS(nlohmann::json::parse(R"({"tag":"bogus"})").get<PhaseClass>(), ValidationError);
}
