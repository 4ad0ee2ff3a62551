#pragma once

// Inner loops shared by normest and gram, each with a serial reference and an
// OpenMP version. Matrices are row-major with split real/imaginary storage.

#include <complex>
#include <cstddef>
#include <vector>

namespace oscidecay::kernels {

using cplx = std::complex<double>;

struct SplitMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> re;
    std::vector<double> im;

    SplitMatrix() = default;
    SplitMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), re(r * c), im(r * c) {}
    cplx at(std::size_t i, std::size_t j) const { return {re[i * cols + j], im[i * cols + j]}; }
    void set(std::size_t i, std::size_t j, cplx z) {
        re[i * cols + j] = z.real();
        im[i * cols + j] = z.imag();
    }
};

/// out[a*V.rows + b] = sum_j U(a,j) g_j V(b,j)
void separable_image_serial(const SplitMatrix& U, const SplitMatrix& V, const std::vector<cplx>& g,
                            std::vector<cplx>& out);
void separable_image(const SplitMatrix& U, const SplitMatrix& V, const std::vector<cplx>& g, std::vector<cplx>& out);

/// y = M x
void matvec_serial(const SplitMatrix& M, const std::vector<cplx>& x, std::vector<cplx>& y);
void matvec(const SplitMatrix& M, const std::vector<cplx>& x, std::vector<cplx>& y);

/// y = M^* x
void adjoint_matvec_serial(const SplitMatrix& M, const std::vector<cplx>& x, std::vector<cplx>& y);
void adjoint_matvec(const SplitMatrix& M, const std::vector<cplx>& x, std::vector<cplx>& y);

}  // namespace oscidecay::kernels
