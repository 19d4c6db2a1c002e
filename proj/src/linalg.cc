#include "leaksim/linalg.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace leaksim {

ComplexMatrix::ComplexMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {
}

ComplexMatrix::ComplexMatrix(size_t rows, size_t cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols) {
        throw std::invalid_argument("ComplexMatrix: entry count does not match shape");
    }
    if (!all_finite()) {
        throw std::invalid_argument("ComplexMatrix: non-finite entry");
    }
}

ComplexMatrix ComplexMatrix::identity(size_t n) {
    ComplexMatrix m(n, n);
    for (size_t k = 0; k < n; k++) {
        m(k, k) = 1.0;
    }
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(const std::vector<cplx> &diag) {
    ComplexMatrix m(diag.size(), diag.size());
    for (size_t k = 0; k < diag.size(); k++) {
        m(k, k) = diag[k];
    }
    return m;
}

ComplexMatrix ComplexMatrix::outer(size_t n, size_t a, size_t b, cplx v) {
    ComplexMatrix m(n, n);
    m(a, b) = v;
    return m;
}

ComplexMatrix ComplexMatrix::column(const std::vector<cplx> &v) {
    return ComplexMatrix(v.size(), 1, v);
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix r(cols_, rows_);
    for (size_t i = 0; i < rows_; i++) {
        for (size_t j = 0; j < cols_; j++) {
            r(j, i) = std::conj((*this)(i, j));
        }
    }
    return r;
}

ComplexMatrix ComplexMatrix::transpose() const {
    ComplexMatrix r(cols_, rows_);
    for (size_t i = 0; i < rows_; i++) {
        for (size_t j = 0; j < cols_; j++) {
            r(j, i) = (*this)(i, j);
        }
    }
    return r;
}

ComplexMatrix ComplexMatrix::conj() const {
    ComplexMatrix r = *this;
    for (auto &x : r.data_) {
        x = std::conj(x);
    }
    return r;
}

cplx ComplexMatrix::trace() const {
    cplx t = 0;
    for (size_t k = 0; k < std::min(rows_, cols_); k++) {
        t += (*this)(k, k);
    }
    return t;
}

double ComplexMatrix::max_abs() const {
    double m = 0;
    for (const auto &x : data_) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

double ComplexMatrix::frobenius_norm() const {
    double s = 0;
    for (const auto &x : data_) {
        s += std::norm(x);
    }
    return std::sqrt(s);
}

double ComplexMatrix::norm1() const {
    double best = 0;
    for (size_t j = 0; j < cols_; j++) {
        double s = 0;
        for (size_t i = 0; i < rows_; i++) {
            s += std::abs((*this)(i, j));
        }
        best = std::max(best, s);
    }
    return best;
}

bool ComplexMatrix::all_finite() const {
    for (const auto &x : data_) {
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) {
            return false;
        }
    }
    return true;
}

ComplexMatrix &ComplexMatrix::operator+=(const ComplexMatrix &other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
        throw std::invalid_argument("ComplexMatrix +=: shape mismatch");
    }
    for (size_t k = 0; k < data_.size(); k++) {
        data_[k] += other.data_[k];
    }
    return *this;
}

ComplexMatrix &ComplexMatrix::operator-=(const ComplexMatrix &other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
        throw std::invalid_argument("ComplexMatrix -=: shape mismatch");
    }
    for (size_t k = 0; k < data_.size(); k++) {
        data_[k] -= other.data_[k];
    }
    return *this;
}

ComplexMatrix &ComplexMatrix::operator*=(cplx s) {
    for (auto &x : data_) {
        x *= s;
    }
    return *this;
}

bool ComplexMatrix::operator==(const ComplexMatrix &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
}

std::string ComplexMatrix::str() const {
    std::stringstream ss;
    ss << std::setprecision(6);
    for (size_t i = 0; i < rows_; i++) {
        for (size_t j = 0; j < cols_; j++) {
            const auto &x = (*this)(i, j);
            ss << (j ? " " : "") << x.real() << (x.imag() < 0 ? "-" : "+") << std::abs(x.imag()) << "i";
        }
        ss << "\n";
    }
    return ss.str();
}

ComplexMatrix operator*(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("ComplexMatrix *: shape mismatch");
    }
    ComplexMatrix r(a.rows(), b.cols());
    for (size_t i = 0; i < a.rows(); i++) {
        for (size_t k = 0; k < a.cols(); k++) {
            cplx v = a(i, k);
            if (v == cplx(0)) {
                continue;
            }
            for (size_t j = 0; j < b.cols(); j++) {
                r(i, j) += v * b(k, j);
            }
        }
    }
    return r;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix &b) {
    a += b;
    return a;
}

ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix &b) {
    a -= b;
    return a;
}

ComplexMatrix operator*(cplx s, ComplexMatrix a) {
    a *= s;
    return a;
}

ComplexMatrix kron(const ComplexMatrix &a, const ComplexMatrix &b) {
    ComplexMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
    for (size_t i = 0; i < a.rows(); i++) {
        for (size_t j = 0; j < a.cols(); j++) {
            cplx v = a(i, j);
            if (v == cplx(0)) {
                continue;
            }
            for (size_t k = 0; k < b.rows(); k++) {
                for (size_t l = 0; l < b.cols(); l++) {
                    r(i * b.rows() + k, j * b.cols() + l) = v * b(k, l);
                }
            }
        }
    }
    return r;
}

std::vector<cplx> operator*(const ComplexMatrix &a, const std::vector<cplx> &v) {
    if (a.cols() != v.size()) {
        throw std::invalid_argument("ComplexMatrix * vector: shape mismatch");
    }
    std::vector<cplx> r(a.rows());
    for (size_t i = 0; i < a.rows(); i++) {
        for (size_t k = 0; k < a.cols(); k++) {
            r[i] += a(i, k) * v[k];
        }
    }
    return r;
}

double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    }
    double m = 0;
    for (size_t k = 0; k < a.data().size(); k++) {
        m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
    }
    return m;
}

HermitianEigen hermitian_eigen(const ComplexMatrix &input) {
    if (!input.is_square()) {
        throw std::invalid_argument("hermitian_eigen: matrix not square");
    }
    size_t n = input.rows();
    ComplexMatrix a(n, n);
    for (size_t i = 0; i < n; i++) {
        for (size_t j = 0; j < n; j++) {
            a(i, j) = 0.5 * (input(i, j) + std::conj(input(j, i)));
        }
    }
    ComplexMatrix v = ComplexMatrix::identity(n);

    double scale = a.frobenius_norm();
    for (int sweep = 0; sweep < 60 && scale > 0; sweep++) {
        double off = 0;
        for (size_t p = 0; p < n; p++) {
            for (size_t q = p + 1; q < n; q++) {
                off += std::norm(a(p, q));
            }
        }
        if (std::sqrt(off) <= 1e-16 * scale) {
            break;
        }
        for (size_t p = 0; p < n; p++) {
            for (size_t q = p + 1; q < n; q++) {
                double mag = std::abs(a(p, q));
                if (mag <= 1e-20 * scale) {
                    continue;
                }
                cplx phase = a(p, q) / mag;
                double app = a(p, p).real();
                double aqq = a(q, q).real();
                double theta = (aqq - app) / (2 * mag);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                double c = 1 / std::sqrt(t * t + 1);
                double s = t * c;
                cplx ph = std::conj(phase);  // e^{-i theta}
                cplx cq = c * ph;
                cplx sq = s * ph;
                // Columns: A <- A G, V <- V G.
                for (size_t k = 0; k < n; k++) {
                    cplx akp = a(k, p);
                    cplx akq = a(k, q);
                    a(k, p) = c * akp - sq * akq;
                    a(k, q) = s * akp + cq * akq;
                    cplx vkp = v(k, p);
                    cplx vkq = v(k, q);
                    v(k, p) = c * vkp - sq * vkq;
                    v(k, q) = s * vkp + cq * vkq;
                }
                // Rows: A <- G^dag A.
                for (size_t k = 0; k < n; k++) {
                    cplx apk = a(p, k);
                    cplx aqk = a(q, k);
                    a(p, k) = c * apk - std::conj(sq) * aqk;
                    a(q, k) = s * apk + std::conj(cq) * aqk;
                }
                a(p, q) = 0;
                a(q, p) = 0;
            }
        }
    }

    std::vector<size_t> order(n);
    for (size_t k = 0; k < n; k++) {
        order[k] = k;
    }
    std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) { return a(x, x).real() < a(y, y).real(); });
    HermitianEigen result;
    result.values.resize(n);
    result.vectors = ComplexMatrix(n, n);
    for (size_t k = 0; k < n; k++) {
        result.values[k] = a(order[k], order[k]).real();
        for (size_t i = 0; i < n; i++) {
            result.vectors(i, k) = v(i, order[k]);
        }
    }
    return result;
}

ComplexMatrix solve(const ComplexMatrix &a_in, const ComplexMatrix &b_in) {
    if (!a_in.is_square() || a_in.rows() != b_in.rows()) {
        throw std::invalid_argument("solve: shape mismatch");
    }
    size_t n = a_in.rows();
    size_t m = b_in.cols();
    ComplexMatrix a = a_in;
    ComplexMatrix b = b_in;
    for (size_t col = 0; col < n; col++) {
        size_t piv = col;
        double best = std::abs(a(col, col));
        for (size_t r = col + 1; r < n; r++) {
            double v = std::abs(a(r, col));
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best == 0) {
            throw std::runtime_error("solve: singular matrix");
        }
        if (piv != col) {
            for (size_t k = 0; k < n; k++) {
                std::swap(a(col, k), a(piv, k));
            }
            for (size_t k = 0; k < m; k++) {
                std::swap(b(col, k), b(piv, k));
            }
        }
        cplx inv = 1.0 / a(col, col);
        for (size_t r = col + 1; r < n; r++) {
            cplx f = a(r, col) * inv;
            if (f == cplx(0)) {
                continue;
            }
            for (size_t k = col; k < n; k++) {
                a(r, k) -= f * a(col, k);
            }
            for (size_t k = 0; k < m; k++) {
                b(r, k) -= f * b(col, k);
            }
        }
    }
    ComplexMatrix x(n, m);
    for (size_t r = n; r-- > 0;) {
        for (size_t k = 0; k < m; k++) {
            cplx s = b(r, k);
            for (size_t c = r + 1; c < n; c++) {
                s -= a(r, c) * x(c, k);
            }
            x(r, k) = s / a(r, r);
        }
    }
    return x;
}

ComplexMatrix matrix_exp(const ComplexMatrix &a) {
    if (!a.is_square()) {
        throw std::invalid_argument("matrix_exp: matrix not square");
    }
    static const double b[] = {64764752532480000.0,
                               32382376266240000.0,
                               7771770303897600.0,
                               1187353796428800.0,
                               129060195264000.0,
                               10559470521600.0,
                               670442572800.0,
                               33522128640.0,
                               1323241920.0,
                               40840800.0,
                               960960.0,
                               16380.0,
                               182.0,
                               1.0};
    const double theta13 = 5.371920351148152;
    size_t n = a.rows();
    double norm = a.norm1();
    int s = 0;
    if (norm > theta13) {
        s = (int)std::ceil(std::log2(norm / theta13));
    }
    ComplexMatrix x = std::ldexp(1.0, -s) * a;
    ComplexMatrix id = ComplexMatrix::identity(n);
    ComplexMatrix x2 = x * x;
    ComplexMatrix x4 = x2 * x2;
    ComplexMatrix x6 = x4 * x2;
    ComplexMatrix u_inner = x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id;
    ComplexMatrix u = x * u_inner;
    ComplexMatrix v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;
    ComplexMatrix r = solve(v - u, v + u);
    for (int k = 0; k < s; k++) {
        r = r * r;
    }
    return r;
}

}  // namespace leaksim
