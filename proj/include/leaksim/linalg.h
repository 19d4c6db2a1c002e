#ifndef LEAKSIM_LINALG_H
#define LEAKSIM_LINALG_H

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace leaksim {

using cplx = std::complex<double>;

/// Dense complex matrix with row-major storage.
class ComplexMatrix {
   public:
    ComplexMatrix() = default;
    ComplexMatrix(size_t rows, size_t cols);
    ComplexMatrix(size_t rows, size_t cols, std::vector<cplx> entries);

    static ComplexMatrix identity(size_t n);
    static ComplexMatrix zeros(size_t rows, size_t cols) { return ComplexMatrix(rows, cols); }
    static ComplexMatrix diagonal(const std::vector<cplx> &diag);
    /// |a><b| on a space of dimension n.
    static ComplexMatrix outer(size_t n, size_t a, size_t b, cplx v = 1.0);
    static ComplexMatrix column(const std::vector<cplx> &v);

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    bool is_square() const { return rows_ == cols_; }
    const std::vector<cplx> &data() const { return data_; }
    std::vector<cplx> &data() { return data_; }

    cplx &operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
    const cplx &operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

    ComplexMatrix adjoint() const;
    ComplexMatrix transpose() const;
    ComplexMatrix conj() const;
    cplx trace() const;
    double max_abs() const;
    double frobenius_norm() const;
    double norm1() const;
    bool all_finite() const;

    ComplexMatrix &operator+=(const ComplexMatrix &other);
    ComplexMatrix &operator-=(const ComplexMatrix &other);
    ComplexMatrix &operator*=(cplx s);

    bool operator==(const ComplexMatrix &other) const;
    bool operator!=(const ComplexMatrix &other) const { return !(*this == other); }

    std::string str() const;

   private:
    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<cplx> data_;
};

ComplexMatrix operator*(const ComplexMatrix &a, const ComplexMatrix &b);
ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix &b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix &b);
ComplexMatrix operator*(cplx s, ComplexMatrix a);
ComplexMatrix kron(const ComplexMatrix &a, const ComplexMatrix &b);
std::vector<cplx> operator*(const ComplexMatrix &a, const std::vector<cplx> &v);

/// max_ij |a_ij - b_ij|; shapes must agree.
double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b);

struct HermitianEigen {
    std::vector<double> values;  // ascending
    ComplexMatrix vectors;       // columns are eigenvectors
};

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
/// The anti-Hermitian part of the input is ignored.
HermitianEigen hermitian_eigen(const ComplexMatrix &a);

/// Solves a X = b by LU decomposition with partial pivoting.
ComplexMatrix solve(const ComplexMatrix &a, const ComplexMatrix &b);

/// Matrix exponential by scaling and squaring with a degree 13 Pade approximant.
ComplexMatrix matrix_exp(const ComplexMatrix &a);

}  // namespace leaksim

#endif
