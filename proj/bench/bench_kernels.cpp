// Serial reference kernels against their OpenMP versions.
//   bench_kernels [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>

#include "oscidecay/gram.hpp"
#include "oscidecay/kernels.hpp"
#include "oscidecay/parallel.hpp"

using namespace oscidecay;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

kernels::SplitMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0, 1);
    kernels::SplitMatrix m(rows, cols);
    for (auto& x : m.re) x = n(rng);
    for (auto& x : m.im) x = n(rng);
    return m;
}

std::vector<cplx> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0, 1);
    std::vector<cplx> v(n);
    for (auto& z : v) z = cplx(d(rng), d(rng));
    return v;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void row(const char* name, double serial, double parallel, double diff) {
    std::printf("%-28s %10.4f %10.4f %8.2fx %10.2e\n", name, serial, parallel, serial / parallel, diff);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 1) set_threads(std::atoi(argv[1]));
    std::printf("threads: %d\n", max_threads());
    std::printf("%-28s %10s %10s %9s %10s\n", "kernel", "serial s", "omp s", "speedup", "max diff");

    std::mt19937_64 rng(1);

    {
        const auto U = random_matrix(1200, 600, rng), V = random_matrix(900, 600, rng);
        const auto g = random_vector(600, rng);
        std::vector<cplx> a, b;
        const double ts = best_of(3, [&] { kernels::separable_image_serial(U, V, g, a); });
        const double tp = best_of(3, [&] { kernels::separable_image(U, V, g, b); });
        row("separable_image 1200x900x600", ts, tp, max_diff(a, b));
    }
    {
        const auto M = random_matrix(20000, 800, rng);
        const auto x = random_vector(800, rng), z = random_vector(20000, rng);
        std::vector<cplx> a(20000), b(20000), c(800), d(800);
        const double ts = best_of(5, [&] { kernels::matvec_serial(M, x, a); });
        const double tp = best_of(5, [&] { kernels::matvec(M, x, b); });
        row("matvec 20000x800", ts, tp, max_diff(a, b));
        const double ts2 = best_of(5, [&] { kernels::adjoint_matvec_serial(M, z, c); });
        const double tp2 = best_of(5, [&] { kernels::adjoint_matvec(M, z, d); });
        row("adjoint_matvec 20000x800", ts2, tp2, max_diff(c, d));
    }
    for (auto [name, spec, lambda] : {std::tuple{"gram apply banded l=2000", normal_form_c(), 2000.0},
                                      std::tuple{"gram apply dense l=300", make_phase({1, 0}, {1, 0, -1}), 300.0}}) {
        const GramOperator g(spec, lambda, default_amplitude());
        const auto x = random_vector(g.size(), rng);
        std::vector<cplx> a, b;
        const double ts = best_of(3, [&] { g.apply_serial(x, a); });
        const double tp = best_of(3, [&] { g.apply(x, b); });
        row(name, ts, tp, max_diff(a, b));
    }
    return 0;
}
