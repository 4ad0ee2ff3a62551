#include "oscidecay/phase.hpp"

#include <cmath>

#include "oscidecay/error.hpp"

namespace oscidecay {

double LinearForm::norm() const { return std::hypot(p, q); }

double QuadraticForm::norm() const { return std::sqrt(alpha * alpha + beta * beta + gamma * gamma); }

PhaseSpec PhaseSpec::with_d_const(double d) const {
    if (!(d > 0.0 && d <= 1.0)) {
        throw ValidationError("d_const must lie in (0, 1]");
    }
    PhaseSpec out = *this;
    out.d_const = d;
    return out;
}

const char* to_string(PhaseTag tag) {
    switch (tag) {
        case PhaseTag::NonDegenerate:
            return "non_degenerate";
        case PhaseTag::DegenerateB:
            return "degenerate_b";
        case PhaseTag::DegenerateC:
            return "degenerate_c";
    }
    return "unknown";
}

double eval_phase(const PhaseSpec& spec, double u, double v, double t) {
    return spec.d_const * (spec.p1(u, v) * t * t + spec.p2(u, v) * t);
}

double eval_normal_form(const PhaseSpec& spec, double up, double vp, double tp) {
    switch (spec.klass.tag) {
        case PhaseTag::DegenerateB:
            return spec.d_const * (up * tp * tp + spec.klass.a * up * up * tp);
        case PhaseTag::DegenerateC:
            return spec.d_const * (up * tp * tp + vp * vp * tp);
        case PhaseTag::NonDegenerate:
            break;
    }
    throw ValidationError("non-degenerate phases have no normal form");
}

double discriminant(const QuadraticForm& q) { return q.beta * q.beta - 4.0 * q.alpha * q.gamma; }

bool divides(const LinearForm& l, const QuadraticForm& q) {
    if (l.is_zero()) {
        throw ValidationError("linear form must be non-zero");
    }
    // pu + qv vanishes along (q, -p); l | Q iff Q vanishes there too.
    const double at_root = q(l.q, -l.p);
    const double ln = l.norm();
    return std::abs(at_root) <= kDividesTol * q.norm() * ln * ln;
}

namespace {

void validate_pair(const LinearForm& p1, const QuadraticForm& p2) {
    if (!std::isfinite(p1.p) || !std::isfinite(p1.q) || !std::isfinite(p2.alpha) || !std::isfinite(p2.beta) ||
        !std::isfinite(p2.gamma)) {
        throw ValidationError("form coefficients must be finite");
    }
    if (p1.is_zero()) {
        throw ValidationError("P1 must be non-zero");
    }
    if (p2.is_zero()) {
        throw ValidationError("P2 must be non-zero");
    }
}

bool square_free(const QuadraticForm& q) {
    const double n2 = q.alpha * q.alpha + q.beta * q.beta + q.gamma * q.gamma;
    return std::abs(discriminant(q)) > kSquareFreeTol * n2;
}

// Least-squares a with q ~ a * l^2 over the coefficient vectors.
double square_ratio(const LinearForm& l, const QuadraticForm& q) {
    const double s0 = l.p * l.p, s1 = 2.0 * l.p * l.q, s2 = l.q * l.q;
    return (q.alpha * s0 + q.beta * s1 + q.gamma * s2) / (s0 * s0 + s1 * s1 + s2 * s2);
}

}  // namespace

PhaseClass classify(const LinearForm& p1, const QuadraticForm& p2) {
    validate_pair(p1, p2);
    if (square_free(p2)) {
        return {PhaseTag::NonDegenerate, 0.0};
    }
    if (divides(p1, p2)) {
        return {PhaseTag::DegenerateB, square_ratio(p1, p2)};
    }
    return {PhaseTag::DegenerateC, 0.0};
}

PhaseSpec reduce_to_normal_form(const LinearForm& p1, const QuadraticForm& p2) {
    const PhaseClass klass = classify(p1, p2);
    PhaseSpec spec;
    spec.p1 = p1;
    spec.p2 = p2;
    spec.klass = klass;

    switch (klass.tag) {
        case PhaseTag::NonDegenerate:
            throw ValidationError("phase is non-degenerate; no normal form reduction applies");
        case PhaseTag::DegenerateB:
            // u' = P1, v' any complement of P1.
            spec.transform = {p1.p, p1.q, -p1.q, p1.p};
            return spec;
        case PhaseTag::DegenerateC:
            break;
    }

    // P2 = k L^2; factor about the larger of the two squared coefficients.
    LinearForm root;
    if (std::abs(p2.alpha) >= std::abs(p2.gamma)) {
        root = {1.0, p2.beta / (2.0 * p2.alpha)};
    } else {
        root = {p2.beta / (2.0 * p2.gamma), 1.0};
    }
    const double k = square_ratio(root, p2);
    const double c = std::sqrt(std::abs(k));
    spec.transform = {p1.p, p1.q, c * root.p, c * root.q};
    spec.t_sign = k > 0.0 ? 1 : -1;
    if (spec.transform.det() == 0.0) {
        throw NumericalError("normal form transform is singular");
    }
    return spec;
}

PhaseSpec make_phase(const LinearForm& p1, const QuadraticForm& p2) {
    const PhaseClass klass = classify(p1, p2);
    if (klass.tag != PhaseTag::NonDegenerate) {
        return reduce_to_normal_form(p1, p2);
    }
    PhaseSpec spec;
    spec.p1 = p1;
    spec.p2 = p2;
    spec.klass = klass;
    return spec;
}

PhaseSpec normal_form_c(double d_const) { return reduce_to_normal_form({1.0, 0.0}, {0.0, 0.0, 1.0}).with_d_const(d_const); }

PhaseSpec normal_form_b(double a) { return reduce_to_normal_form({1.0, 0.0}, {a, 0.0, 0.0}); }

LinearForm compose(const LinearForm& l, const Mat2& m) {
    return {l.p * m.a11 + l.q * m.a21, l.p * m.a12 + l.q * m.a22};
}

QuadraticForm compose(const QuadraticForm& q, const Mat2& m) {
    return {
        q.alpha * m.a11 * m.a11 + q.beta * m.a11 * m.a21 + q.gamma * m.a21 * m.a21,
        2.0 * q.alpha * m.a11 * m.a12 + q.beta * (m.a11 * m.a22 + m.a12 * m.a21) + 2.0 * q.gamma * m.a21 * m.a22,
        q.alpha * m.a12 * m.a12 + q.beta * m.a12 * m.a22 + q.gamma * m.a22 * m.a22,
    };
}

void to_json(nlohmann::json& j, const LinearForm& l) { j = nlohmann::json::array({l.p, l.q}); }

void from_json(const nlohmann::json& j, LinearForm& l) {
    if (!j.is_array() || j.size() != 2) {
        throw ValidationError("linear form must be a 2-element array [p,q]");
    }
    l = {j[0].get<double>(), j[1].get<double>()};
}

void to_json(nlohmann::json& j, const QuadraticForm& q) { j = nlohmann::json::array({q.alpha, q.beta, q.gamma}); }

void from_json(const nlohmann::json& j, QuadraticForm& q) {
    if (!j.is_array() || j.size() != 3) {
        throw ValidationError("quadratic form must be a 3-element array [alpha,beta,gamma]");
    }
    q = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void to_json(nlohmann::json& j, const PhaseClass& c) {
    j = nlohmann::json{{"tag", to_string(c.tag)}};
    if (c.tag == PhaseTag::DegenerateB) {
        j["a"] = c.a;
    }
}

void from_json(const nlohmann::json& j, PhaseClass& c) {
    const auto tag = j.at("tag").get<std::string>();
    if (tag == "non_degenerate") {
        c = {PhaseTag::NonDegenerate, 0.0};
    } else if (tag == "degenerate_b") {
        c = {PhaseTag::DegenerateB, j.at("a").get<double>()};
    } else if (tag == "degenerate_c") {
        c = {PhaseTag::DegenerateC, 0.0};
    } else {
        throw ValidationError("unknown phase class tag '" + tag + "'");
    }
}

void to_json(nlohmann::json& j, const PhaseSpec& s) {
    j = nlohmann::json{{"p1", s.p1}, {"p2", s.p2}, {"class", s.klass}, {"d_const", s.d_const}};
    if (s.klass.tag != PhaseTag::NonDegenerate) {
        j["transform"] = {{s.transform.a11, s.transform.a12}, {s.transform.a21, s.transform.a22}};
        j["t_sign"] = s.t_sign;
        j["normal_form"] = s.klass.tag == PhaseTag::DegenerateB ? "u t^2 + a u^2 t" : "u t^2 + v^2 t";
    }
}

}  // namespace oscidecay
