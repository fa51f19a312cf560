#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "manar/matcore.hpp"

namespace manar {

enum class ManifoldKind { orthogonal, stiefel, grassmann };

/// Which homogeneous space a trajectory or estimator works on.
/// k is ignored for the orthogonal group (points are n x n there).
struct Manifold {
    ManifoldKind kind = ManifoldKind::orthogonal;
    int n = 2;
    int k = 1;

    static Manifold orthogonal(int n) { return {ManifoldKind::orthogonal, n, n}; }
    static Manifold stiefel(int n, int k) { return {ManifoldKind::stiefel, n, k}; }
    static Manifold grassmann(int n, int k) { return {ManifoldKind::grassmann, n, k}; }

    int point_cols() const { return kind == ManifoldKind::orthogonal ? n : k; }

    void validate() const {
        if (n < 1) throw dimension_error("Manifold: need n >= 1");
        if (kind != ManifoldKind::orthogonal && (k < 1 || k > n))
            throw dimension_error("Manifold: need 1 <= k <= n");
    }

    bool operator==(const Manifold& other) const = default;
};

inline std::string to_string(ManifoldKind kind) {
    switch (kind) {
        case ManifoldKind::orthogonal: return "orthogonal";
        case ManifoldKind::stiefel: return "stiefel";
        case ManifoldKind::grassmann: return "grassmann";
    }
    return "?";
}

inline ManifoldKind manifold_kind_from_string(const std::string& name) {
    if (name == "orthogonal") return ManifoldKind::orthogonal;
    if (name == "stiefel") return ManifoldKind::stiefel;
    if (name == "grassmann") return ManifoldKind::grassmann;
    throw invalid_input_error("unknown manifold '" + name +
                              "' (expected orthogonal, stiefel, or grassmann)");
}

namespace detail {

inline void require_orthonormal_cols(const Matrix& y, const char* who) {
    require_finite(y, who);
    const int k = static_cast<int>(y.cols());
    if (y.rows() < y.cols() || k < 1)
        throw dimension_error(std::string(who) + ": need n >= k >= 1");
    const double defect = (y.transpose() * y - Matrix::Identity(k, k)).norm();
    if (defect > 1e-10)
        throw invalid_input_error(std::string(who) + ": column orthonormality defect " +
                                  std::to_string(defect) + " exceeds 1e-10");
}

}  // namespace detail

/// Point on St(n, k): an n x k matrix with orthonormal columns.
class StiefelPoint {
public:
    explicit StiefelPoint(Matrix y) : y_(std::move(y)) {
        detail::require_orthonormal_cols(y_, "StiefelPoint");
    }

    /// First k columns of I_n.
    static StiefelPoint canonical(int n, int k) {
        return StiefelPoint(Matrix::Identity(n, n).leftCols(k));
    }

    const Matrix& mat() const noexcept { return y_; }
    int n() const noexcept { return static_cast<int>(y_.rows()); }
    int k() const noexcept { return static_cast<int>(y_.cols()); }

private:
    Matrix y_;
};

/// Point on Gr(n, k), represented by an orthonormal-column n x k matrix.
/// Every operation consuming this type is invariant (to approximation
/// tolerance) under Y -> Y R for R in O(k).
class GrassmannPoint {
public:
    explicit GrassmannPoint(Matrix y) : y_(std::move(y)) {
        detail::require_orthonormal_cols(y_, "GrassmannPoint");
    }

    static GrassmannPoint canonical(int n, int k) {
        return GrassmannPoint(Matrix::Identity(n, n).leftCols(k));
    }

    const Matrix& mat() const noexcept { return y_; }
    int n() const noexcept { return static_cast<int>(y_.rows()); }
    int k() const noexcept { return static_cast<int>(y_.cols()); }

private:
    Matrix y_;
};

/// Tangent vector to St(n, k): base point plus an n x k direction D with
/// base^T D antisymmetric.
///
/// The checked constructor enforces tangency to 1e-10 (relative to ||D||).
/// stiefel_log_approx produces its direction from a rational approximation
/// whose tangency defect is O(dist^3); those values are wrapped via
/// `approximate` and carry the defect by design.
class StiefelTangent {
public:
    StiefelTangent(StiefelPoint base, Matrix d)
        : base_(std::move(base)), d_(std::move(d)) {
        detail::require_finite(d_, "StiefelTangent");
        if (d_.rows() != base_.n() || d_.cols() != base_.k())
            throw dimension_error("StiefelTangent: direction shape mismatch");
        const Matrix a = base_.mat().transpose() * d_;
        const double defect = (a + a.transpose()).norm();
        if (defect > 1e-10 * std::max(1.0, d_.norm()))
            throw invalid_tangent_error("StiefelTangent: tangency defect " +
                                        std::to_string(defect));
    }

    static StiefelTangent approximate(StiefelPoint base, Matrix d) {
        return StiefelTangent(unchecked_t{}, std::move(base), std::move(d));
    }

    static StiefelTangent zero(StiefelPoint base) {
        Matrix d = Matrix::Zero(base.n(), base.k());
        return StiefelTangent(std::move(base), std::move(d));
    }

    const StiefelPoint& base() const noexcept { return base_; }
    const Matrix& dir() const noexcept { return d_; }
    double norm() const { return d_.norm(); }

private:
    struct unchecked_t {};
    StiefelTangent(unchecked_t, StiefelPoint base, Matrix d)
        : base_(std::move(base)), d_(std::move(d)) {
        detail::require_finite(d_, "StiefelTangent");
        if (d_.rows() != base_.n() || d_.cols() != base_.k())
            throw dimension_error("StiefelTangent: direction shape mismatch");
    }

    StiefelPoint base_;
    Matrix d_;
};

namespace detail {

/// Antisymmetric generator of the canonical-metric geodesic through X with
/// velocity D: Omega X = (tangential part of D), and at X = I_{n,k} it is
/// exactly the block matrix [[A, -B^T], [B, 0]].
inline Matrix stiefel_generator(const Matrix& x, const Matrix& d) {
    const Matrix a = 0.5 * (x.transpose() * d - d.transpose() * x);
    Matrix omega = d * x.transpose() - x * d.transpose() - x * a * x.transpose();
    return 0.5 * (omega - omega.transpose());
}

}  // namespace detail

/// Geodesic exponential for the canonical metric on St(n, k).
inline StiefelPoint stiefel_exp(const StiefelPoint& x, const StiefelTangent& t) {
    if (t.base().n() != x.n() || t.base().k() != x.k() ||
        (t.base().mat() - x.mat()).norm() > 1e-12 * std::max(1.0, x.mat().norm()))
        throw invalid_tangent_error("stiefel_exp: tangent is based at a different point");
    const Matrix omega = detail::stiefel_generator(x.mat(), t.dir());
    return StiefelPoint(expm(omega) * x.mat());
}

/// Rational (Pade-type) approximation of the Stiefel logarithm:
///   log_X(Y) ~= 2 (Y - X)(I_k + X^T Y)^{-1},
/// exact to third order in the geodesic distance.
inline StiefelTangent stiefel_log_approx(const StiefelPoint& x, const StiefelPoint& y) {
    if (x.n() != y.n() || x.k() != y.k())
        throw dimension_error("stiefel_log_approx: dimension mismatch");
    const int k = x.k();
    const Matrix m = Matrix::Identity(k, k) + x.mat().transpose() * y.mat();
    Eigen::JacobiSVD<Matrix> svd(m);
    const double smin = svd.singularValues()(k - 1);
    if (smin <= 0 || svd.singularValues()(0) / smin >= 1e8)
        throw out_of_chart_error("stiefel_log_approx: I + X^T Y is near singular");
    const Matrix d = 2.0 * (y.mat() - x.mat()) * m.inverse();
    return StiefelTangent::approximate(x, d);
}

/// Canonical-metric length of a direction at X: sqrt(1/2 tr(D^T (I - 1/2 X X^T) D)).
inline double stiefel_canonical_norm(const StiefelPoint& x, const Matrix& d) {
    const Matrix xtd = x.mat().transpose() * d;
    const double q = 0.5 * (d.squaredNorm() - 0.5 * xtd.squaredNorm());
    return std::sqrt(std::max(0.0, q));
}

/// Approximate geodesic distance on St(n, k) built from stiefel_log_approx.
inline double stiefel_dist_approx(const StiefelPoint& x, const StiefelPoint& y) {
    const StiefelTangent l = stiefel_log_approx(x, y);
    return stiefel_canonical_norm(x, l.dir());
}

/// Procrustes alignment of representatives: returns Y R with
/// R = V U^T from the SVD X^T Y = U S V^T, which makes X^T (Y R) symmetric
/// positive semidefinite. Throws when some principal angle is within 1e-6
/// of pi/2 (the subspaces share no well-conditioned chart there).
inline Matrix grassmann_align(const Matrix& x, const Matrix& y) {
    Eigen::JacobiSVD<Matrix> svd(x.transpose() * y,
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
    const int k = static_cast<int>(x.cols());
    if (svd.singularValues()(k - 1) < 1e-6)
        throw out_of_chart_error(
            "grassmann_align: principal angle within 1e-6 of pi/2");
    return y * (svd.matrixV() * svd.matrixU().transpose());
}

/// Approximate geodesic distance on Gr(n, k): representatives are aligned
/// first, then the Stiefel-type log is measured in the Grassmann metric
/// tr(V^T (I - X X^T) W).
inline double grassmann_dist_approx(const GrassmannPoint& x, const GrassmannPoint& y) {
    if (x.n() != y.n() || x.k() != y.k())
        throw dimension_error("grassmann_dist_approx: dimension mismatch");
    const int k = x.k();
    const Matrix ya = grassmann_align(x.mat(), y.mat());
    const Matrix m = Matrix::Identity(k, k) + x.mat().transpose() * ya;
    const Matrix l = 2.0 * (ya - x.mat()) * m.inverse();
    const Matrix xtl = x.mat().transpose() * l;
    const double q = l.squaredNorm() - xtl.squaredNorm();
    return std::sqrt(std::max(0.0, q));
}

/// Bi-invariant geodesic distance on O(n): ||logm_so(P^T Q)||_F.
inline double ortho_dist(const OrthoMatrix& p, const OrthoMatrix& q) {
    if (p.dim() != q.dim()) throw dimension_error("ortho_dist: dimension mismatch");
    return logm_so(OrthoMatrix(p.mat().transpose() * q.mat())).norm();
}

/// Left action of O(n) on each manifold (plain matrix product).
inline OrthoMatrix apply_group(const OrthoMatrix& phi, const OrthoMatrix& p) {
    if (phi.dim() != p.dim()) throw dimension_error("apply_group: dimension mismatch");
    return OrthoMatrix(phi.mat() * p.mat());
}

inline StiefelPoint apply_group(const OrthoMatrix& phi, const StiefelPoint& p) {
    if (phi.dim() != p.n()) throw dimension_error("apply_group: dimension mismatch");
    return StiefelPoint(phi.mat() * p.mat());
}

inline GrassmannPoint apply_group(const OrthoMatrix& phi, const GrassmannPoint& p) {
    if (phi.dim() != p.n()) throw dimension_error("apply_group: dimension mismatch");
    return GrassmannPoint(phi.mat() * p.mat());
}

/// QR re-orthonormalization with a sign-fixed diagonal; used to repair
/// orthonormality drift in long simulation chains.
inline Matrix reorthonormalize(const Matrix& y) {
    Eigen::HouseholderQR<Matrix> qr(y);
    Matrix q = Matrix(qr.householderQ()).leftCols(y.cols());
    const Matrix r = qr.matrixQR().topRows(y.cols());
    for (int j = 0; j < y.cols(); ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

}  // namespace manar
