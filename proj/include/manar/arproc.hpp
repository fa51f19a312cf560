#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "manar/manifolds.hpp"
#include "manar/matcore.hpp"
#include "manar/random.hpp"

namespace manar {

/// Ordered observations Z_0..Z_N of one AR(1) run, with the metadata needed
/// to reproduce or score it.
struct Trajectory {
    Manifold manifold;
    std::vector<Matrix> points;
    double sigma = 0.0;
    std::optional<Matrix> phi_true;
    std::uint64_t seed = 0;

    int steps() const { return static_cast<int>(points.size()) - 1; }

    void validate() const {
        manifold.validate();
        if (points.size() < 2)
            throw invalid_input_error("Trajectory: need at least 2 points");
        for (const Matrix& p : points) {
            if (p.rows() != manifold.n || p.cols() != manifold.point_cols())
                throw dimension_error("Trajectory: point shape mismatch");
            detail::require_orthonormal_cols(p, "Trajectory point");
        }
        if (phi_true && (phi_true->rows() != manifold.n || phi_true->cols() != manifold.n))
            throw dimension_error("Trajectory: phi_true shape mismatch");
        if (sigma < 0) throw invalid_input_error("Trajectory: sigma must be >= 0");
    }
};

/// Everything needed to generate one trajectory.
struct ProcessSpec {
    Manifold manifold;
    Matrix phi;
    double sigma = 0.0;
    int steps = 1;
    Matrix start;
    std::uint64_t seed = 0;

    void validate() const {
        manifold.validate();
        if (steps < 1) throw invalid_input_error("ProcessSpec: need steps >= 1");
        if (sigma < 0) throw invalid_input_error("ProcessSpec: sigma must be >= 0");
        if (phi.rows() != manifold.n || phi.cols() != manifold.n)
            throw dimension_error("ProcessSpec: phi must be n x n");
        if (start.rows() != manifold.n || start.cols() != manifold.point_cols())
            throw dimension_error("ProcessSpec: start point shape mismatch");
    }
};

/// Draw a system parameter near the identity: Phi = expm(s * X / ||X||_F)
/// with X a unit-direction antisymmetric draw and s = |N(0, scale)|, so
/// that dist(Phi, I_n) = s exactly for s < pi. The half-normal law matches
/// the "standard deviation of dist(Phi, I) ~ scale" protocol.
inline OrthoMatrix sample_system_parameter(int n, double scale, RandomStream& rng) {
    if (scale <= 0) throw invalid_input_error("sample_system_parameter: scale must be > 0");
    const AntisymMatrix x = sample_antisym(n, 1.0, rng);
    const double s = std::abs(scale * rng.normal());
    const double nrm = x.norm();
    if (nrm == 0.0) return OrthoMatrix::identity(n);
    return expm(AntisymMatrix((s / nrm) * x.mat()));
}

/// Generate Z_0 = p, Z_j = expm(eps_j) Phi Z_{j-1} with fresh antisymmetric
/// Gaussian noise per step. Orthonormality is repaired by QR every 1000
/// steps to bound drift in long chains.
inline Trajectory simulate_ar1(const ProcessSpec& spec) {
    spec.validate();
    RandomStream rng(spec.seed);
    const int n = spec.manifold.n;

    Trajectory traj;
    traj.manifold = spec.manifold;
    traj.sigma = spec.sigma;
    traj.phi_true = spec.phi;
    traj.seed = spec.seed;
    traj.points.reserve(static_cast<std::size_t>(spec.steps) + 1);
    traj.points.push_back(spec.start);

    Matrix z = spec.start;
    for (int j = 1; j <= spec.steps; ++j) {
        const AntisymMatrix eps = sample_antisym(n, spec.sigma, rng);
        z = expm(eps.mat()) * (spec.phi * z);
        if (j % 1000 == 0) z = reorthonormalize(z);
        traj.points.push_back(z);
    }
    traj.validate();
    return traj;
}

/// Karcher fixed-point output. `converged` distinguishes a stationary mean
/// from the last iterate of an exhausted iteration; `residual` is the norm
/// of the tangential part of the mean log at the returned point.
struct KarcherResult {
    Matrix mean;
    bool converged = false;
    double residual = 0.0;
    int iterations = 0;
};

namespace detail {

inline KarcherResult karcher_orthogonal(const std::vector<Matrix>& points, double tol,
                                        int max_iter) {
    const int n = static_cast<int>(points.front().rows());
    Matrix m = points.front();
    KarcherResult result;
    for (int it = 1; it <= max_iter; ++it) {
        Matrix acc = Matrix::Zero(n, n);
        const Matrix mt = m.transpose();
        for (const Matrix& p : points) acc += logm_so(OrthoMatrix(mt * p)).mat();
        acc /= static_cast<double>(points.size());
        result.iterations = it;
        result.residual = acc.norm();
        if (result.residual < tol) {
            result.converged = true;
            break;
        }
        m = m * expm(acc);
    }
    result.mean = std::move(m);
    return result;
}

/// Shared St/Gr fixed-point loop. The Grassmann variant aligns each sample
/// to the current iterate before taking the approximate log and measures
/// the mean in the horizontal subspace.
inline KarcherResult karcher_stiefel_like(const std::vector<Matrix>& points, bool grassmann,
                                          double tol, int max_iter) {
    const int n = static_cast<int>(points.front().rows());
    const int k = static_cast<int>(points.front().cols());
    const Matrix id_k = Matrix::Identity(k, k);
    Matrix m = points.front();
    KarcherResult result;
    for (int it = 1; it <= max_iter; ++it) {
        Matrix acc = Matrix::Zero(n, k);
        for (const Matrix& p : points) {
            const Matrix q = grassmann ? grassmann_align(m, p) : p;
            const Matrix g = id_k + m.transpose() * q;
            Eigen::JacobiSVD<Matrix> svd(g);
            const double smin = svd.singularValues()(k - 1);
            if (smin <= 0 || svd.singularValues()(0) / smin >= 1e8)
                throw out_of_chart_error("karcher_mean_points: sample outside log chart");
            acc += 2.0 * (q - m) * g.inverse();
        }
        acc /= static_cast<double>(points.size());
        // Tangential part: the approximate log carries an O(dist^3)
        // (Grassmann: O(dist^2)) non-tangential remainder that the
        // exponential ignores, so the stationarity test must too.
        Matrix tangential;
        if (grassmann) {
            tangential = acc - m * (m.transpose() * acc);
        } else {
            const Matrix mta = m.transpose() * acc;
            tangential = acc - m * (0.5 * (mta + mta.transpose()));
        }
        result.iterations = it;
        result.residual = tangential.norm();
        if (result.residual < tol) {
            result.converged = true;
            break;
        }
        m = expm(stiefel_generator(m, acc)) * m;
    }
    result.mean = std::move(m);
    return result;
}

}  // namespace detail

/// Fixed-point Karcher/Frechet mean: m <- exp_m(mean of log_m(points)),
/// iterated until the mean-log norm drops below tol or max_iter is reached.
/// Initialization is the first point of the list.
inline KarcherResult karcher_mean_points(const std::vector<Matrix>& points,
                                         const Manifold& manifold, double tol = 1e-10,
                                         int max_iter = 200) {
    manifold.validate();
    if (points.empty())
        throw invalid_input_error("karcher_mean_points: need at least one point");
    if (tol <= 0 || max_iter < 1)
        throw invalid_input_error("karcher_mean_points: need tol > 0 and max_iter >= 1");
    for (const Matrix& p : points)
        if (p.rows() != manifold.n || p.cols() != manifold.point_cols())
            throw dimension_error("karcher_mean_points: point shape mismatch");

    switch (manifold.kind) {
        case ManifoldKind::orthogonal:
            return detail::karcher_orthogonal(points, tol, max_iter);
        case ManifoldKind::stiefel:
            return detail::karcher_stiefel_like(points, false, tol, max_iter);
        case ManifoldKind::grassmann:
            return detail::karcher_stiefel_like(points, true, tol, max_iter);
    }
    throw invalid_input_error("karcher_mean_points: unknown manifold");
}

/// Distance between two points in the metric of `manifold`.
inline double manifold_dist(const Manifold& manifold, const Matrix& a, const Matrix& b) {
    switch (manifold.kind) {
        case ManifoldKind::orthogonal:
            return ortho_dist(OrthoMatrix(a), OrthoMatrix(b));
        case ManifoldKind::stiefel:
            return stiefel_dist_approx(StiefelPoint(a), StiefelPoint(b));
        case ManifoldKind::grassmann:
            return grassmann_dist_approx(GrassmannPoint(a), GrassmannPoint(b));
    }
    throw invalid_input_error("manifold_dist: unknown manifold");
}

/// One-step empirical check of the mean-propagation law E[Z_1] = Phi z_0:
/// draw M independent samples Z_1 = expm(eps) Phi z_0, Karcher-average
/// them, and return the distance of the average to Phi z_0.
inline double empirical_mean_check(const OrthoMatrix& phi, const Matrix& z0,
                                   const Manifold& manifold, double sigma, int samples,
                                   RandomStream& rng, double karcher_tol = 1e-10,
                                   int karcher_max_iter = 200) {
    manifold.validate();
    if (samples < 2) throw invalid_input_error("empirical_mean_check: need samples >= 2");
    if (phi.dim() != manifold.n || z0.rows() != manifold.n ||
        z0.cols() != manifold.point_cols())
        throw dimension_error("empirical_mean_check: shape mismatch");

    const Matrix target = phi.mat() * z0;
    std::vector<Matrix> draws;
    draws.reserve(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        const AntisymMatrix eps = sample_antisym(manifold.n, sigma, rng);
        draws.push_back(expm(eps.mat()) * target);
    }
    const KarcherResult mean = karcher_mean_points(draws, manifold, karcher_tol,
                                                   karcher_max_iter);
    if (!mean.converged)
        throw non_convergence_error("empirical_mean_check: Karcher mean did not converge");
    return manifold_dist(manifold, mean.mean, target);
}

}  // namespace manar
