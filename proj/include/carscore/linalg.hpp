#pragma once

// Symmetric matrix functions built on a full eigendecomposition, plus the
// low-rank route for shrinkage correlation matrices when d exceeds n.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "carscore/error.hpp"

namespace carscore {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kEigenTolerance = 1e-12;

/// Dense symmetric matrix. Construction symmetrizes inputs whose asymmetry is
/// within rounding noise and rejects anything else.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(const Matrix& m) {
        require(m.rows() == m.cols(), ErrorCode::DimensionMismatch,
                "matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        require(m.rows() > 0, ErrorCode::DimensionMismatch, "matrix has order 0");
        require(m.allFinite(), ErrorCode::InvalidParameters, "matrix has non-finite entries");
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
        require(asym <= kSymmetryTolerance * scale, ErrorCode::NotSymmetric,
                "max asymmetry " + std::to_string(asym));
        m_ = (m + m.transpose()) * 0.5;
    }

    static SymMatrix identity(Index d) { return SymMatrix(Matrix::Identity(d, d)); }

    Index order() const noexcept { return m_.rows(); }
    const Matrix& matrix() const noexcept { return m_; }
    double operator()(Index i, Index j) const { return m_(i, j); }

    /// Principal submatrix on the given indices, in the given order.
    template <typename Indices>
    SymMatrix principal(const Indices& idx) const {
        const auto k = static_cast<Index>(idx.size());
        Matrix sub(k, k);
        for (Index a = 0; a < k; ++a)
            for (Index b = 0; b < k; ++b)
                sub(a, b) = m_(static_cast<Index>(idx[a]), static_cast<Index>(idx[b]));
        return SymMatrix(sub);
    }

    bool is_correlation(double tol = 1e-12) const {
        for (Index i = 0; i < order(); ++i) {
            if (std::abs(m_(i, i) - 1.0) > tol) return false;
            for (Index j = 0; j < order(); ++j)
                if (std::abs(m_(i, j)) > 1.0 + tol) return false;
        }
        return true;
    }

private:
    Matrix m_;
};

struct SpectralDecomposition {
    Vector eigenvalues;   // descending
    Matrix eigenvectors;  // orthonormal columns matching eigenvalues

    Index order() const noexcept { return eigenvalues.size(); }
    double largest_magnitude() const { return eigenvalues.cwiseAbs().maxCoeff(); }
    double smallest() const { return eigenvalues(eigenvalues.size() - 1); }
};

namespace detail {

// Connected components of the exact nonzero pattern, each sorted ascending.
inline std::vector<std::vector<Index>> sparsity_blocks(const Matrix& m) {
    const Index d = m.rows();
    std::vector<Index> parent(static_cast<std::size_t>(d));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index i) {
        while (parent[static_cast<std::size_t>(i)] != i)
            i = parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
        return i;
    };
    for (Index i = 0; i < d; ++i)
        for (Index j = i + 1; j < d; ++j)
            if (m(i, j) != 0.0) parent[static_cast<std::size_t>(find(j))] = find(i);
    std::vector<std::vector<Index>> blocks;
    std::vector<Index> slot(static_cast<std::size_t>(d), -1);
    for (Index i = 0; i < d; ++i) {
        const Index r = find(i);
        if (slot[static_cast<std::size_t>(r)] < 0) {
            slot[static_cast<std::size_t>(r)] = static_cast<Index>(blocks.size());
            blocks.emplace_back();
        }
        blocks[static_cast<std::size_t>(slot[static_cast<std::size_t>(r)])].push_back(i);
    }
    return blocks;
}

}  // namespace detail

/// Eigendecomposition computed separately on each block of the exact sparsity
/// pattern, so eigenvectors never mix variables from different blocks and
/// matrix functions keep block-diagonal structure exactly.
inline SpectralDecomposition spectral_decomposition(const SymMatrix& m) {
    const Index d = m.order();
    Vector values(d);
    Matrix vectors = Matrix::Zero(d, d);
    Index col = 0;
    for (const auto& block : detail::sparsity_blocks(m.matrix())) {
        const auto k = static_cast<Index>(block.size());
        Matrix sub(k, k);
        for (Index a = 0; a < k; ++a)
            for (Index b = 0; b < k; ++b) sub(a, b) = m.matrix()(block[a], block[b]);
        Eigen::SelfAdjointEigenSolver<Matrix> solver(sub);
        if (solver.info() != Eigen::Success)
            fail(ErrorCode::NotPositiveDefinite, "eigendecomposition did not converge");
        for (Index e = 0; e < k; ++e, ++col) {
            values(col) = solver.eigenvalues()(e);
            for (Index a = 0; a < k; ++a) vectors(block[a], col) = solver.eigenvectors()(a, e);
        }
    }
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) > values(b); });
    SpectralDecomposition out{Vector(d), Matrix(d, d)};
    for (Index i = 0; i < d; ++i) {
        out.eigenvalues(i) = values(order[static_cast<std::size_t>(i)]);
        out.eigenvectors.col(i) = vectors.col(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

namespace detail {

inline bool is_integer_power(double p) { return p == std::round(p); }

// Eigenvalues raised to p, with the clamping rules applied relative to the
// largest eigenvalue magnitude.
inline Vector powered_eigenvalues(const Vector& ev, double p) {
    const double scale = ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0;
    const double tol = kEigenTolerance * scale;
    Vector out(ev.size());
    for (Index i = 0; i < ev.size(); ++i) {
        double v = ev(i);
        if (p < 0.0) {
            if (!(v > tol))
                fail(ErrorCode::NotPositiveDefinite,
                     "eigenvalue " + std::to_string(v) + " with power " + std::to_string(p));
        } else if (!is_integer_power(p)) {
            if (v < -tol)
                fail(ErrorCode::NotPositiveDefinite,
                     "negative eigenvalue " + std::to_string(v) + " with fractional power");
            if (v <= tol) v = 0.0;
        }
        out(i) = p == 1.0 ? v : std::pow(v, p);
    }
    return out;
}

}  // namespace detail

inline SymMatrix sym_power(const SpectralDecomposition& s, double p) {
    const Vector lp = detail::powered_eigenvalues(s.eigenvalues, p);
    const Matrix r = s.eigenvectors * lp.asDiagonal() * s.eigenvectors.transpose();
    return SymMatrix((r + r.transpose()) * 0.5);
}

/// Q diag(lambda^p) Q^T for symmetric m. Negative powers need every eigenvalue
/// above 1e-12 times the largest; fractional positive powers clamp eigenvalues
/// within that tolerance to zero.
inline SymMatrix sym_power(const SymMatrix& m, double p) { return sym_power(spectral_decomposition(m), p); }

/// (Q diag(lambda^p) Q^T) v without forming the matrix.
inline Vector apply_power(const SpectralDecomposition& s, double p, const Vector& v) {
    require(v.size() == s.order(), ErrorCode::DimensionMismatch, "vector length does not match matrix order");
    const Vector lp = detail::powered_eigenvalues(s.eigenvalues, p);
    return s.eigenvectors * (lp.cwiseProduct(s.eigenvectors.transpose() * v));
}

/// Powers of R_shrink = lambda I + (1 - lambda) R_emp where R_emp = X^T X / (n-1)
/// comes from a column-standardized n x d matrix X. The thin SVD of X gives
/// R_emp = V S^2 V^T / (n-1), so
///   R_shrink^p = lambda^p I + V diag((lambda + (1-lambda) s_i^2)^p - lambda^p) V^T
/// and one application costs O(nd) after an O(n^2 d) factorization.
class ShrinkagePowerOperator {
public:
    ShrinkagePowerOperator(const Matrix& standardized, double lambda) : lambda_(lambda), d_(standardized.cols()) {
        require(lambda > 0.0 && lambda <= 1.0, ErrorCode::LambdaOutOfRange,
                "lambda " + std::to_string(lambda) + " outside (0, 1]");
        const Index n = standardized.rows();
        require(n >= 2 && d_ >= 1, ErrorCode::DegenerateData, "need at least 2 rows and 1 column");
        for (Index j = 0; j < d_; ++j)
            require(standardized.col(j).squaredNorm() > 0.0, ErrorCode::DegenerateData,
                    "column " + std::to_string(j) + " has zero variance");
        if (lambda_ == 1.0) return;
        const Matrix scaled = standardized / std::sqrt(static_cast<double>(n - 1));
        Eigen::BDCSVD<Matrix> svd(scaled, Eigen::ComputeThinV);
        basis_ = svd.matrixV();
        eig_ = svd.singularValues().array().square().matrix();
    }

    Index order() const noexcept { return d_; }
    double lambda() const noexcept { return lambda_; }

    Vector apply(const Vector& v, double p = -0.5) const {
        require(v.size() == d_, ErrorCode::DimensionMismatch, "vector length does not match operator order");
        const double base = std::pow(lambda_, p);
        Vector out = base * v;
        if (basis_.size() == 0) return out;
        Vector weights(eig_.size());
        for (Index i = 0; i < eig_.size(); ++i)
            weights(i) = std::pow(lambda_ + (1.0 - lambda_) * eig_(i), p) - base;
        out.noalias() += basis_ * weights.cwiseProduct(basis_.transpose() * v);
        return out;
    }

private:
    double lambda_;
    Index d_;
    Matrix basis_;  // d x min(n, d)
    Vector eig_;    // squared singular values of X / sqrt(n-1)
};

inline ShrinkagePowerOperator shrinkage_inverse_sqrt(const Matrix& standardized, double lambda) {
    return ShrinkagePowerOperator(standardized, lambda);
}

}  // namespace carscore
