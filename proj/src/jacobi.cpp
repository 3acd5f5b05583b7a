#include "bciqt/jacobi.hpp"

#include "bciqt/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bciqt {

SquareMatrix SquareMatrix::identity(std::size_t n) {
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

SquareMatrix SquareMatrix::outer(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(ErrorCode::DimensionMismatch, "outer product of unequal lengths");
    SquareMatrix m(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < y.size(); ++j) m(i, j) = x[i] * y[j];
    }
    return m;
}

SquareMatrix SquareMatrix::transposed() const {
    SquareMatrix t(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
    }
    return t;
}

double SquareMatrix::trace() const noexcept {
    double t = 0.0;
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

double SquareMatrix::frobenius_norm() const noexcept {
    return std::sqrt(std::inner_product(a_.begin(), a_.end(), a_.begin(), 0.0));
}

std::vector<double> SquareMatrix::apply(std::span<const double> x) const {
    if (x.size() != n_) throw Error(ErrorCode::DimensionMismatch, "matrix-vector size mismatch");
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) y[i] += (*this)(i, j) * x[j];
    }
    return y;
}

namespace {

void require_same_size(const SquareMatrix& l, const SquareMatrix& r) {
    if (l.size() != r.size()) throw Error(ErrorCode::DimensionMismatch, "matrix size mismatch");
}

}  // namespace

SquareMatrix operator+(const SquareMatrix& l, const SquareMatrix& r) {
    require_same_size(l, r);
    SquareMatrix m = l;
    for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] += r.a_[i];
    return m;
}

SquareMatrix operator-(const SquareMatrix& l, const SquareMatrix& r) {
    require_same_size(l, r);
    SquareMatrix m = l;
    for (std::size_t i = 0; i < m.a_.size(); ++i) m.a_[i] -= r.a_[i];
    return m;
}

SquareMatrix operator*(double s, const SquareMatrix& m) {
    SquareMatrix out = m;
    for (auto& v : out.a_) v *= s;
    return out;
}

SquareMatrix operator*(const SquareMatrix& l, const SquareMatrix& r) {
    require_same_size(l, r);
    const std::size_t n = l.size();
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double lik = l(i, k);
            for (std::size_t j = 0; j < n; ++j) m(i, j) += lik * r(k, j);
        }
    }
    return m;
}

std::vector<double> EigenDecomposition::vector(std::size_t j) const {
    std::vector<double> v(vectors.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = vectors(i, j);
    return v;
}

namespace {

double off_diagonal_norm(const SquareMatrix& a) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (i != j) sum += a(i, j) * a(i, j);
        }
    }
    return std::sqrt(sum);
}

// Zeroes a(p,q) with one rotation, accumulating it into v.
void rotate(SquareMatrix& a, SquareMatrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    if (apq == 0.0) return;
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
    const double c = 1.0 / std::hypot(1.0, t);
    const double s = t * c;
    const std::size_t n = a.size();

    for (std::size_t k = 0; k < n; ++k) {
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(k, q) = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double apk = a(p, k);
        const double aqk = a(q, k);
        a(p, k) = c * apk - s * aqk;
        a(q, k) = s * apk + c * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

}  // namespace

EigenDecomposition oracle_eigendecompose(const SquareMatrix& matrix) {
    const std::size_t n = matrix.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(matrix(i, j) - matrix(j, i)) > 1e-10) {
                throw Error(ErrorCode::NotSymmetric, "entry (" + std::to_string(i) + "," +
                                                         std::to_string(j) + ") differs from its transpose");
            }
        }
    }

    SquareMatrix a = matrix;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
    }
    SquareMatrix v = SquareMatrix::identity(n);
    // Run to rounding level: eigenvector error is off-diagonal mass over the
    // eigengap, so a looser stop would leak into small-gap comparisons.
    const double tolerance = std::numeric_limits<double>::epsilon() * matrix.frobenius_norm();

    int sweeps = 0;
    double off = off_diagonal_norm(a);
    while (off > tolerance) {
        if (sweeps == kJacobiMaxSweeps) {
            throw Error(ErrorCode::NoConvergence,
                        "Jacobi did not converge in " + std::to_string(kJacobiMaxSweeps) + " sweeps");
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) rotate(a, v, p, q);
        }
        ++sweeps;
        const double next = off_diagonal_norm(a);
        if (!(next < off)) break;  // stalled at rounding noise
        off = next;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return a(l, l) > a(r, r); });

    EigenDecomposition out;
    out.sweeps = sweeps;
    out.vectors = SquareMatrix(n);
    out.values.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values.push_back(a(order[j], order[j]));
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

}  // namespace bciqt
