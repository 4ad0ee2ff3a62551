#pragma once

// Cubic homogeneous phases S(u,v,t) = D * (P1(u,v) t^2 + P2(u,v) t), their
// classification, and reduction of the degenerate ones to the normal forms
//   (b)  u t^2 + a u^2 t      (P1 divides P2)
//   (c)  u t^2 + v^2 t        (P1 does not divide P2)

#include <string>

#include "json.hpp"

namespace oscidecay {

/// p*u + q*v
struct LinearForm {
    double p = 0.0;
    double q = 0.0;

    double operator()(double u, double v) const { return p * u + q * v; }
    double norm() const;
    bool is_zero() const { return p == 0.0 && q == 0.0; }
};

/// alpha*u^2 + beta*u*v + gamma*v^2
struct QuadraticForm {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;

    double operator()(double u, double v) const { return alpha * u * u + beta * u * v + gamma * v * v; }
    double norm() const;
    bool is_zero() const { return alpha == 0.0 && beta == 0.0 && gamma == 0.0; }
};

/// Row-major 2x2 matrix acting on (u,v): (u',v') = M (u,v).
struct Mat2 {
    double a11 = 1.0, a12 = 0.0;
    double a21 = 0.0, a22 = 1.0;

    double det() const { return a11 * a22 - a12 * a21; }
    static Mat2 identity() { return {}; }
};

enum class PhaseTag { NonDegenerate, DegenerateB, DegenerateC };

struct PhaseClass {
    PhaseTag tag = PhaseTag::NonDegenerate;
    double a = 0.0;  // coefficient of the (b) normal form, DegenerateB only
};

struct PhaseSpec {
    LinearForm p1;
    QuadraticForm p2;
    PhaseClass klass;
    // For degenerate phases, (u',v') = transform (u,v) and t' = t_sign * t turn
    // P1 t^2 + P2 t into the normal form. Identity for NonDegenerate.
    Mat2 transform;
    int t_sign = 1;
    double d_const = 1.0;

    /// Copy with the overall scale D replaced; D must lie in (0, 1].
    PhaseSpec with_d_const(double d) const;

    /// True when the phase has no u*v cross term, so that e^{i lambda S}
    /// factors into a u-part times a v-part.
    bool separable() const { return p2.beta == 0.0; }
};

const char* to_string(PhaseTag tag);

double eval_phase(const PhaseSpec& spec, double u, double v, double t);

/// Normal form (b) or (c) times d_const, at already transformed coordinates.
/// Throws ValidationError for NonDegenerate specs.
double eval_normal_form(const PhaseSpec& spec, double u_prime, double v_prime, double t_prime);

double discriminant(const QuadraticForm& q);

/// Relative tolerances used by the classifier.
inline constexpr double kSquareFreeTol = 1e-10;
inline constexpr double kDividesTol = 1e-12;

bool divides(const LinearForm& l, const QuadraticForm& q);

PhaseClass classify(const LinearForm& p1, const QuadraticForm& p2);

PhaseSpec reduce_to_normal_form(const LinearForm& p1, const QuadraticForm& p2);

/// Classified spec for any valid (P1, P2): reduced when degenerate, identity
/// transform otherwise.
PhaseSpec make_phase(const LinearForm& p1, const QuadraticForm& p2);

PhaseSpec normal_form_c(double d_const = 1.0);
PhaseSpec normal_form_b(double a);

/// Forms pulled back through a linear substitution: (P o M)(u,v) = P(M (u,v)).
LinearForm compose(const LinearForm& l, const Mat2& m);
QuadraticForm compose(const QuadraticForm& q, const Mat2& m);

void to_json(nlohmann::json& j, const LinearForm& l);
void from_json(const nlohmann::json& j, LinearForm& l);
void to_json(nlohmann::json& j, const QuadraticForm& q);
void from_json(const nlohmann::json& j, QuadraticForm& q);
void to_json(nlohmann::json& j, const PhaseClass& c);
void from_json(const nlohmann::json& j, PhaseClass& c);
void to_json(nlohmann::json& j, const PhaseSpec& s);

}  // namespace oscidecay
