#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bciqt {

// Dense row-major square matrix. Only used for verification paths and small
// diagnostics; the classifier itself never materialises K x K operators.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

    static SquareMatrix identity(std::size_t n);
    static SquareMatrix outer(std::span<const double> x, std::span<const double> y);

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * n_ + j]; }

    SquareMatrix transposed() const;
    double trace() const noexcept;
    double frobenius_norm() const noexcept;
    std::vector<double> apply(std::span<const double> x) const;

    friend SquareMatrix operator+(const SquareMatrix& l, const SquareMatrix& r);
    friend SquareMatrix operator-(const SquareMatrix& l, const SquareMatrix& r);
    friend SquareMatrix operator*(double s, const SquareMatrix& m);
    friend SquareMatrix operator*(const SquareMatrix& l, const SquareMatrix& r);

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

struct EigenDecomposition {
    std::vector<double> values;  // descending
    SquareMatrix vectors;        // column j pairs with values[j]
    int sweeps = 0;

    std::vector<double> vector(std::size_t j) const;
};

inline constexpr int kJacobiMaxSweeps = 100;

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
// 1e-12 * ||matrix||_F. Throws NotSymmetric when |a_ij - a_ji| > 1e-10 and
// NoConvergence after kJacobiMaxSweeps sweeps.
EigenDecomposition oracle_eigendecompose(const SquareMatrix& matrix);

}  // namespace bciqt
