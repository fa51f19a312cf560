#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "manar/errors.hpp"
#include "manar/random.hpp"

namespace manar {

using Matrix = Eigen::MatrixXd;

namespace detail {

inline void require_finite(const Matrix& m, const char* who) {
    if (!m.allFinite())
        throw invalid_input_error(std::string(who) + ": non-finite entries");
}

inline void require_square(const Matrix& m, const char* who) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw dimension_error(std::string(who) + ": expected a square matrix, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

}  // namespace detail

/// Element of the Lie algebra o(n): real n x n with X^T = -X.
/// Construction validates antisymmetry; all library operations that
/// produce elements of o(n) preserve it exactly in floating point.
class AntisymMatrix {
public:
    explicit AntisymMatrix(Matrix m) : m_(std::move(m)) {
        detail::require_finite(m_, "AntisymMatrix");
        detail::require_square(m_, "AntisymMatrix");
        const double scale = m_.cwiseAbs().maxCoeff();
        const double tol = 1e-12 * std::max(scale, 1e-300);
        if ((m_ + m_.transpose()).cwiseAbs().maxCoeff() > tol)
            throw invalid_input_error("AntisymMatrix: matrix is not antisymmetric");
    }

    static AntisymMatrix zero(int n) { return AntisymMatrix(Matrix::Zero(n, n)); }

    const Matrix& mat() const noexcept { return m_; }
    int dim() const noexcept { return static_cast<int>(m_.rows()); }
    double norm() const { return m_.norm(); }

private:
    Matrix m_;
};

/// Element of O(n). Construction validates ||Q^T Q - I||_F <= 1e-10.
class OrthoMatrix {
public:
    explicit OrthoMatrix(Matrix q) : q_(std::move(q)) {
        detail::require_finite(q_, "OrthoMatrix");
        detail::require_square(q_, "OrthoMatrix");
        const int n = static_cast<int>(q_.rows());
        const double defect = (q_.transpose() * q_ - Matrix::Identity(n, n)).norm();
        if (defect > 1e-10)
            throw invalid_input_error("OrthoMatrix: orthogonality defect " +
                                      std::to_string(defect) + " exceeds 1e-10");
    }

    static OrthoMatrix identity(int n) { return OrthoMatrix(Matrix::Identity(n, n)); }

    const Matrix& mat() const noexcept { return q_; }
    int dim() const noexcept { return static_cast<int>(q_.rows()); }

private:
    Matrix q_;
};

/// Matrix exponential (scaling-and-squaring with a Pade kernel).
inline Matrix expm(const Matrix& x) {
    detail::require_finite(x, "expm");
    detail::require_square(x, "expm");
    return x.exp();
}

inline OrthoMatrix expm(const AntisymMatrix& x) { return OrthoMatrix(expm(x.mat())); }

/// Principal logarithm on SO(n) via real Schur decomposition.
///
/// The Schur form of an orthogonal matrix is block diagonal with 1x1
/// blocks +-1 and 2x2 rotation blocks; the angle of each rotation block is
/// extracted and reassembled into an antisymmetric matrix. Rotation angles
/// within 1e-6 of pi are rejected: the branch of the logarithm is ambiguous
/// there.
inline AntisymMatrix logm_so(const OrthoMatrix& q) {
    const int n = q.dim();
    const Matrix& m = q.mat();
    if (m.determinant() < 0)
        throw not_in_so_error("logm_so: determinant is negative, matrix not in SO(n)");

    constexpr double angle_guard = 1e-6;
    Eigen::RealSchur<Matrix> schur(m);
    const Matrix& t = schur.matrixT();
    const Matrix& u = schur.matrixU();

    Matrix s = Matrix::Zero(n, n);
    int i = 0;
    while (i < n) {
        if (i + 1 < n && std::abs(t(i + 1, i)) > 1e-10) {
            // 2x2 rotation block; average the two estimates of cos/sin to
            // shave off Schur roundoff.
            const double c = 0.5 * (t(i, i) + t(i + 1, i + 1));
            const double w = 0.5 * (t(i + 1, i) - t(i, i + 1));
            const double theta = std::atan2(w, c);
            if (std::abs(theta) >= std::numbers::pi - angle_guard)
                throw branch_ambiguity_error("logm_so: rotation angle within 1e-6 of pi");
            s(i, i + 1) = -theta;
            s(i + 1, i) = theta;
            i += 2;
        } else {
            // 1x1 block: eigenvalue +-1. A -1 is a rotation by exactly pi.
            if (t(i, i) < 0)
                throw branch_ambiguity_error("logm_so: eigenvalue -1 (rotation angle pi)");
            i += 1;
        }
    }
    Matrix l = u * s * u.transpose();
    return AntisymMatrix(0.5 * (l - l.transpose()));
}

/// (M - M^T) / 2: orthogonal projection onto o(n) under the Frobenius
/// inner product.
inline AntisymMatrix antisym_project(const Matrix& m) {
    detail::require_finite(m, "antisym_project");
    detail::require_square(m, "antisym_project");
    return AntisymMatrix(0.5 * (m - m.transpose()));
}

/// Zero the lower-right (n-k) x (n-k) block, keeping the blocks that
/// generate motion transverse to the O(n-k) fiber.
inline AntisymMatrix horizontal_project(const AntisymMatrix& x, int k) {
    const int n = x.dim();
    if (k < 1 || k >= n)
        throw dimension_error("horizontal_project: need 1 <= k < n, got k=" +
                              std::to_string(k) + ", n=" + std::to_string(n));
    Matrix h = x.mat();
    h.bottomRightCorner(n - k, n - k).setZero();
    return AntisymMatrix(std::move(h));
}

/// Frobenius inner product tr(X^T Y).
inline double frobenius(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw dimension_error("frobenius: dimension mismatch");
    return (x.array() * y.array()).sum();
}

inline double frobenius(const AntisymMatrix& x, const AntisymMatrix& y) {
    return frobenius(x.mat(), y.mat());
}

/// Lexicographic enumeration of the index pairs (i, j), i < j, underlying
/// the canonical orthonormal basis of o(n).
inline std::vector<std::pair<int, int>> so_basis_order(int n) {
    if (n < 2) throw dimension_error("so_basis_order: need n >= 2");
    std::vector<std::pair<int, int>> order;
    order.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) order.emplace_back(i, j);
    return order;
}

/// Canonical orthonormal basis of o(n): (E_ij - E_ji)/sqrt(2) for i < j,
/// ordered lexicographically. n(n-1)/2 elements.
inline std::vector<AntisymMatrix> so_basis(int n) {
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    std::vector<AntisymMatrix> basis;
    for (auto [i, j] : so_basis_order(n)) {
        Matrix e = Matrix::Zero(n, n);
        e(i, j) = inv_sqrt2;
        e(j, i) = -inv_sqrt2;
        basis.push_back(AntisymMatrix(std::move(e)));
    }
    return basis;
}

/// Remove from `candidate` its Frobenius projections onto each element of
/// `history` (assumed pairwise orthogonal and nonzero). Returns nullopt when
/// the residual collapses below 1e-12 * ||candidate||: the caller treats
/// that as a signal to restart its sweep, not as an error.
inline std::optional<AntisymMatrix> gram_schmidt(const AntisymMatrix& candidate,
                                                 const std::vector<AntisymMatrix>& history) {
    Matrix out = candidate.mat();
    for (const AntisymMatrix& p : history) {
        const double denom = frobenius(p.mat(), p.mat());
        out -= (frobenius(candidate.mat(), p.mat()) / denom) * p.mat();
    }
    if (out.norm() < 1e-12 * candidate.mat().norm()) return std::nullopt;
    return AntisymMatrix(std::move(out));
}

/// Draw an n x n matrix of independent N(0, sigma^2) entries and project it
/// onto o(n). Entry (i, j), i != j, of the result has standard deviation
/// sigma / sqrt(2).
inline AntisymMatrix sample_antisym(int n, double sigma, RandomStream& rng) {
    if (n < 1) throw dimension_error("sample_antisym: need n >= 1");
    if (sigma < 0) throw invalid_input_error("sample_antisym: sigma must be >= 0");
    Matrix g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = sigma * rng.normal();
    return antisym_project(g);
}

}  // namespace manar
