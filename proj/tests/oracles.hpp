#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's quadrature, bump or fitting code.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

inline double mollifier(double x) { return (x >= 0.0 && x < 1.0) ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0; }

inline double step(double x) {
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    const double a = mollifier(x), b = mollifier(1.0 - x);
    return a / (a + b);
}

inline double chi(double x) { return step((std::abs(x) - 1.5) / 0.5); }

/// f_lambda written out from its definition.
inline double extremal(double t, double lambda, double eps) {
    const double s = std::sqrt(lambda) * t;
    return step((std::abs(s - 1.0) - eps / 2.0) / (eps / 2.0));
}

/// Trapezoid with n intervals over the support of f_lambda of
/// e^{i lambda (u t^2 + v^2 t)} chi(u) chi(v) chi(t) f_lambda(t).
inline cplx brute_image(double lambda, double eps, double u, double v, int n = 1'000'000) {
    const double a = (1.0 - eps) / std::sqrt(lambda), b = (1.0 + eps) / std::sqrt(lambda);
    const double h = (b - a) / n;
    cplx acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double t = a + h * k;
        const double w = (k == 0 || k == n) ? 0.5 * h : h;
        acc += w * chi(t) * extremal(t, lambda, eps) * std::polar(1.0, lambda * (u * t * t + v * v * t));
    }
    return chi(u) * chi(v) * acc;
}

/// Closed-form simple regression slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

/// Largest singular value of diag(sqrt(wr)) M diag(1/sqrt(wc)) by dense SVD.
inline double weighted_svd_norm(const Eigen::MatrixXcd& M, const std::vector<double>& wr, const std::vector<double>& wc) {
    Eigen::MatrixXcd B = M;
    for (Eigen::Index i = 0; i < B.rows(); ++i) B.row(i) *= std::sqrt(wr[i]);
    for (Eigen::Index j = 0; j < B.cols(); ++j) B.col(j) /= std::sqrt(wc[j]);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(B);
    return svd.singularValues()(0);
}

/// Gauss-Legendre on [-1,1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (z * p1 - p0) / (z * z - 1.0);
        x[i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

inline void composite(double a, double b, int panels, int order, std::vector<double>& x, std::vector<double>& w) {
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);
    x.clear();
    w.clear();
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double m = a + h * (p + 0.5);
        for (int k = 0; k < order; ++k) {
            x.push_back(m + 0.5 * h * gx[k]);
            w.push_back(0.5 * h * gw[k]);
        }
    }
}

/// Operator norm through the separable Gram G = (U^* W_u U) o (V^* W_v V) on
/// composite GL grids, for S = D (p u t^2 + alpha u^2 t + q v t^2 + gamma v^2 t).
inline double separable_gram_norm(double lambda, double p, double alpha, double q, double gamma, int nt, int nu,
                                  int nv) {
    std::vector<double> t, wt, u, wu, v, wv;
    composite(-2, 2, nt, 10, t, wt);
    composite(-2, 2, nu, 10, u, wu);
    composite(-2, 2, nv, 10, v, wv);
    auto gram = [&](const std::vector<double>& x, const std::vector<double>& wx, double lin, double quad) {
        Eigen::MatrixXcd Z(x.size(), t.size());
        for (std::size_t a = 0; a < x.size(); ++a) {
            const double amp = std::sqrt(wx[a]) * chi(x[a]);
            for (std::size_t j = 0; j < t.size(); ++j) {
                Z(a, j) = std::polar(amp, lambda * (lin * x[a] * t[j] * t[j] + quad * x[a] * x[a] * t[j]));
            }
        }
        Eigen::MatrixXcd G = Z.adjoint() * Z;
        return G;
    };
    Eigen::MatrixXcd G = gram(u, wu, p, alpha).cwiseProduct(gram(v, wv, q, gamma));
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t j = 0; j < t.size(); ++j) {
            G(i, j) *= chi(t[i]) * chi(t[j]) * std::sqrt(wt[i] * wt[j]);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
    return std::sqrt(es.eigenvalues().maxCoeff());
}

}  // namespace oracle
