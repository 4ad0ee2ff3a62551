#include "oscidecay/kernels.hpp"

#include <algorithm>
#include <cstddef>

namespace oscidecay::kernels {

namespace {

// Row a of the separable image, given h = U(a,:) * g already split.
inline void image_row(const SplitMatrix& V, const double* hr, const double* hi, cplx* out_row) {
    const std::size_t nt = V.cols;
    for (std::size_t b = 0; b < V.rows; ++b) {
        const double* vr = V.re.data() + b * nt;
        const double* vi = V.im.data() + b * nt;
        double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
        for (std::size_t j = 0; j < nt; ++j) {
            sr += vr[j] * hr[j] - vi[j] * hi[j];
            si += vr[j] * hi[j] + vi[j] * hr[j];
        }
        out_row[b] = {sr, si};
    }
}

inline void scaled_row(const SplitMatrix& U, std::size_t a, const std::vector<cplx>& g, double* hr, double* hi) {
    const std::size_t nt = U.cols;
    for (std::size_t j = 0; j < nt; ++j) {
        const double ur = U.re[a * nt + j], ui = U.im[a * nt + j];
        hr[j] = ur * g[j].real() - ui * g[j].imag();
        hi[j] = ur * g[j].imag() + ui * g[j].real();
    }
}

inline cplx row_dot(const SplitMatrix& M, std::size_t i, const double* xr, const double* xi) {
    const double* mr = M.re.data() + i * M.cols;
    const double* mi = M.im.data() + i * M.cols;
    double sr = 0.0, si = 0.0;
#pragma omp simd reduction(+ : sr, si)
    for (std::size_t j = 0; j < M.cols; ++j) {
        sr += mr[j] * xr[j] - mi[j] * xi[j];
        si += mr[j] * xi[j] + mi[j] * xr[j];
    }
    return {sr, si};
}

void split(const std::vector<cplx>& x, std::vector<double>& xr, std::vector<double>& xi) {
    xr.resize(x.size());
    xi.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        xr[j] = x[j].real();
        xi[j] = x[j].imag();
    }
}

}  // namespace

void separable_image_serial(const SplitMatrix& U, const SplitMatrix& V, const std::vector<cplx>& g,
                            std::vector<cplx>& out) {
    out.assign(U.rows * V.rows, cplx{});
    for (std::size_t a = 0; a < U.rows; ++a) {
        for (std::size_t b = 0; b < V.rows; ++b) {
            cplx s = 0.0;
            for (std::size_t j = 0; j < U.cols; ++j) {
                s += U.at(a, j) * g[j] * V.at(b, j);
            }
            out[a * V.rows + b] = s;
        }
    }
}

void separable_image(const SplitMatrix& U, const SplitMatrix& V, const std::vector<cplx>& g, std::vector<cplx>& out) {
    out.assign(U.rows * V.rows, cplx{});
    const auto nu = static_cast<std::ptrdiff_t>(U.rows);
#pragma omp parallel
    {
        std::vector<double> hr(U.cols), hi(U.cols);
#pragma omp for schedule(static)
        for (std::ptrdiff_t a = 0; a < nu; ++a) {
            scaled_row(U, static_cast<std::size_t>(a), g, hr.data(), hi.data());
            image_row(V, hr.data(), hi.data(), out.data() + static_cast<std::size_t>(a) * V.rows);
        }
    }
}

void matvec_serial(const SplitMatrix& M, const std::vector<cplx>& x, std::vector<cplx>& y) {
    y.assign(M.rows, cplx{});
    for (std::size_t i = 0; i < M.rows; ++i) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < M.cols; ++j) {
            s += M.at(i, j) * x[j];
        }
        y[i] = s;
    }
}

void matvec(const SplitMatrix& M, const std::vector<cplx>& x, std::vector<cplx>& y) {
    std::vector<double> xr, xi;
    split(x, xr, xi);
    y.assign(M.rows, cplx{});
    const auto n = static_cast<std::ptrdiff_t>(M.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        y[i] = row_dot(M, static_cast<std::size_t>(i), xr.data(), xi.data());
    }
}

void adjoint_matvec_serial(const SplitMatrix& M, const std::vector<cplx>& x, std::vector<cplx>& y) {
    y.assign(M.cols, cplx{});
    for (std::size_t i = 0; i < M.rows; ++i) {
        for (std::size_t j = 0; j < M.cols; ++j) {
            y[j] += std::conj(M.at(i, j)) * x[i];
        }
    }
}

void adjoint_matvec(const SplitMatrix& M, const std::vector<cplx>& x, std::vector<cplx>& y) {
    // Column blocks are independent, so threads never write the same y entry.
    y.assign(M.cols, cplx{});
    constexpr std::size_t kBlock = 256;
    const auto nblocks = static_cast<std::ptrdiff_t>((M.cols + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t blk = 0; blk < nblocks; ++blk) {
        const std::size_t j0 = static_cast<std::size_t>(blk) * kBlock;
        const std::size_t j1 = std::min(M.cols, j0 + kBlock);
        double sr[kBlock] = {}, si[kBlock] = {};
        for (std::size_t i = 0; i < M.rows; ++i) {
            const double xr = x[i].real(), xi = x[i].imag();
            const double* mr = M.re.data() + i * M.cols;
            const double* mi = M.im.data() + i * M.cols;
            for (std::size_t j = j0; j < j1; ++j) {
                // conj(m) * x
                sr[j - j0] += mr[j] * xr + mi[j] * xi;
                si[j - j0] += mr[j] * xi - mi[j] * xr;
            }
        }
        for (std::size_t j = j0; j < j1; ++j) {
            y[j] = {sr[j - j0], si[j - j0]};
        }
    }
}

}  // namespace oscidecay::kernels
