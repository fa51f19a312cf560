#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "manar/arproc.hpp"
#include "manar/manifolds.hpp"
#include "manar/matcore.hpp"

namespace manar {

/// Tuning knobs of the conjugate-gradient estimator.
struct CGSettings {
    double tol = 1e-8;        // stop when ||Delta||_F * |tau| < tol
    int max_outer = 100;      // sweeps
    int line_search_grid = 51;  // grid points on [-1, 1]; odd so 0 is included
    int restart_period = 0;   // inner steps per sweep; 0 means dim o(n)
    // Enumeration order of the o(n) basis used for gradient assembly.
    // Empty means the canonical lexicographic order.
    std::vector<std::pair<int, int>> basis_order;

    void validate() const {
        if (tol <= 0) throw invalid_input_error("CGSettings: tol must be > 0");
        if (max_outer < 1) throw invalid_input_error("CGSettings: max_outer must be >= 1");
        if (line_search_grid < 3 || line_search_grid % 2 == 0)
            throw invalid_input_error(
                "CGSettings: line_search_grid must be odd and >= 3 so the grid "
                "contains 0 and +-1");
        if (restart_period < 0)
            throw invalid_input_error("CGSettings: restart_period must be >= 0");
    }
};

/// Outcome of one estimation run.
struct EstimateReport {
    Matrix phi_hat;
    std::optional<double> error;  // ortho_dist(phi_true, phi_hat), when phi_true is known
    double final_cost = 0.0;
    int outer_iterations = 0;
    int inner_steps = 0;
    bool converged = false;
    double tolerance_used = 0.0;
    double wall_time_ms = 0.0;
};

struct LineSearchResult {
    double tau = 0.0;
    double value = 0.0;
};

/// Minimize g over [-1, 1]: a uniform grid containing 0 and +-1 picks the
/// best bracket, golden-section refinement shrinks it to width 1e-10.
/// The returned value never exceeds g(0), and ties resolve to tau = 0.
inline LineSearchResult line_search(const std::function<double(double)>& g,
                                    int grid_points = 51) {
    if (grid_points < 3 || grid_points % 2 == 0)
        throw invalid_input_error("line_search: grid size must be odd and >= 3");

    auto eval = [&](double tau) {
        const double v = g(tau);
        if (!std::isfinite(v))
            throw line_search_error("line_search: objective is not finite", tau);
        return v;
    };

    LineSearchResult best{0.0, eval(0.0)};
    auto consider = [&](double tau, double value) {
        if (value < best.value) best = {tau, value};
    };

    const int m = grid_points - 1;
    const double h = 2.0 / m;
    int best_index = m / 2;
    for (int i = 0; i <= m; ++i) {
        const double tau = -1.0 + h * i;
        if (i == m / 2) continue;  // tau = 0 already evaluated
        const double v = eval(tau);
        if (v < best.value) {
            best = {tau, v};
            best_index = i;
        }
    }

    double lo = std::max(-1.0, -1.0 + h * (best_index - 1));
    double hi = std::min(1.0, -1.0 + h * (best_index + 1));

    constexpr double inv_phi = 0.6180339887498949;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = eval(x1);
    double f2 = eval(x2);
    consider(x1, f1);
    consider(x2, f2);
    while (hi - lo > 1e-10) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
            consider(x1, f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
            consider(x2, f2);
        }
    }
    return best;
}

/// Per-step products of the summed trace costs, evaluated at one phi and
/// shared by every basis direction of a gradient assembly.
namespace detail {

struct StepTerms {
    Matrix ynext;  // Y_{j+1}; for Grassmann, the aligned representative
    Matrix u;      // Phi^T ynext
    Matrix p;      // left trace factor: directional term is -scale tr(P S)
    Matrix q;      // right trace factor: -scale tr(Q S^T)
    double cost = 0.0;
};

inline void require_well_conditioned(const Eigen::PartialPivLU<Matrix>& lu, int step) {
    if (lu.rcond() < 1e-8)
        throw out_of_chart_error(
            "cost: I_k + Y^T Phi^T Y' has condition number >= 1e8 at step " +
            std::to_string(step));
}

}  // namespace detail

/// Observation window plus the per-step products the cost and gradient
/// formulas share. Immutable snapshot of one trajectory.
class CostContext {
public:
    explicit CostContext(const Trajectory& traj)
        : manifold_(traj.manifold), points_(traj.points) {
        traj.validate();
        if (manifold_.kind == ManifoldKind::orthogonal)
            throw invalid_input_error(
                "CostContext: expected a Stiefel or Grassmann trajectory; the "
                "orthogonal estimator is estimate_orthogonal");
    }

    const Manifold& manifold() const noexcept { return manifold_; }
    const std::vector<Matrix>& points() const noexcept { return points_; }
    int steps() const noexcept { return static_cast<int>(points_.size()) - 1; }

    /// Summed approximate squared-distance cost at phi.
    double cost(const Matrix& phi) const {
        check_phi(phi);
        const int k = manifold_.k;
        const Matrix id_k = Matrix::Identity(k, k);
        const bool grass = manifold_.kind == ManifoldKind::grassmann;
        double total = 0.0;
        for (int j = 0; j < steps(); ++j) {
            const Matrix g = points_[j].transpose() * (phi.transpose() * points_[j + 1]);
            if (grass) {
                Eigen::JacobiSVD<Matrix> svd(g);
                check_overlap(svd.singularValues(), j);
                for (int i = 0; i < k; ++i) {
                    const double s = svd.singularValues()(i);
                    total += 4.0 * (1.0 - s) / (1.0 + s);
                }
            } else {
                Eigen::PartialPivLU<Matrix> lu(id_k + g);
                detail::require_well_conditioned(lu, j);
                const Matrix a = lu.inverse();
                const Matrix b =
                    3.0 * id_k - g - g.transpose() - g * g.transpose();
                total += (a * b).cwiseProduct(a).sum();  // tr(A B A^T)
            }
        }
        return total;
    }

    /// Directional derivative of the cost at phi along an ambient
    /// direction delta (tangent directions are delta = phi * W, W in o(n)).
    double directional(const Matrix& phi, const Matrix& delta) const {
        check_phi(phi);
        if (delta.rows() != manifold_.n || delta.cols() != manifold_.n)
            throw dimension_error("directional: delta must be n x n");
        const double scale = manifold_.kind == ManifoldKind::grassmann ? 4.0 : 1.0;
        double total = 0.0;
        for (int j = 0; j < steps(); ++j) {
            const detail::StepTerms t = step_terms(phi, j);
            const Matrix s = points_[j].transpose() * (delta.transpose() * t.ynext);
            total -= scale * ((t.p * s).trace() + (t.q * s.transpose()).trace());
        }
        return total;
    }

    /// Riemannian gradient coefficient matrix in o(n): entry-wise the
    /// directional derivatives along phi * e for the orthonormal basis
    /// elements e = (E_ij - E_ji)/sqrt(2), assembled in `order` (empty
    /// means canonical lexicographic order).
    AntisymMatrix gradient(const Matrix& phi,
                           std::span<const std::pair<int, int>> order = {}) const {
        check_phi(phi);
        const int n = manifold_.n;
        const double scale = manifold_.kind == ManifoldKind::grassmann ? 4.0 : 1.0;
        Matrix ksum = Matrix::Zero(n, n);
        Matrix lsum = Matrix::Zero(n, n);
        for (int j = 0; j < steps(); ++j) {
            const detail::StepTerms t = step_terms(phi, j);
            ksum += scale * (t.u * (t.p * points_[j].transpose()));
            lsum += scale * (points_[j] * (t.q * t.u.transpose()));
        }
        std::vector<std::pair<int, int>> canonical;
        if (order.empty()) {
            canonical = so_basis_order(n);
            order = canonical;
        }
        Matrix grad = Matrix::Zero(n, n);
        for (auto [i, j] : order) {
            const double c =
                0.5 * (ksum(j, i) - ksum(i, j) + lsum(i, j) - lsum(j, i));
            grad(i, j) = c;
            grad(j, i) = -c;
        }
        return AntisymMatrix(std::move(grad));
    }

private:
    void check_phi(const Matrix& phi) const {
        if (phi.rows() != manifold_.n || phi.cols() != manifold_.n)
            throw dimension_error("CostContext: phi must be n x n");
    }

    void check_overlap(const Eigen::VectorXd& sv, int step) const {
        if (sv(sv.size() - 1) < 1e-6)
            throw out_of_chart_error(
                "grassmann cost: principal angle within 1e-6 of pi/2 at step " +
                std::to_string(step));
    }

    detail::StepTerms step_terms(const Matrix& phi, int j) const {
        const int k = manifold_.k;
        const Matrix id_k = Matrix::Identity(k, k);
        detail::StepTerms t;
        t.ynext = points_[j + 1];
        t.u = phi.transpose() * t.ynext;
        Matrix g = points_[j].transpose() * t.u;
        if (manifold_.kind == ManifoldKind::grassmann) {
            Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
            check_overlap(svd.singularValues(), j);
            const Matrix r = svd.matrixV() * svd.matrixU().transpose();
            t.ynext = t.ynext * r;  // aligned representative of Y_{j+1}
            t.u = t.u * r;
            g = g * r;  // symmetric positive semidefinite after alignment
            Eigen::PartialPivLU<Matrix> lu(id_k + g);
            const Matrix a = lu.inverse();
            const Matrix d = id_k - g * g;
            const Matrix aa = a * a;
            t.p = a * d * aa + g * aa;
            t.q = aa * g + aa * d * a;
            t.cost = 0.0;
            for (int i = 0; i < k; ++i) {
                const double s = svd.singularValues()(i);
                t.cost += 4.0 * (1.0 - s) / (1.0 + s);
            }
        } else {
            Eigen::PartialPivLU<Matrix> lu(id_k + g);
            detail::require_well_conditioned(lu, j);
            const Matrix a = lu.inverse();
            const Matrix c = a.transpose();  // (I + G^T)^{-1} exactly
            const Matrix b = 3.0 * id_k - g - g.transpose() - g * g.transpose();
            const Matrix abc = a * b * c;
            t.p = (abc + c + g.transpose() * c) * a;
            t.q = c * a * (id_k + g) + c * abc;
            t.cost = abc.cwiseProduct(id_k).sum();  // tr(A B C)
        }
        return t;
    }

    Manifold manifold_;
    std::vector<Matrix> points_;
};

/// Per-step inversion estimates on O(n): Phi_hat_l = Z_{l+1} Z_l^{-1}
/// = Z_{l+1} Z_l^T.
inline std::vector<Matrix> stepwise_estimates(const Trajectory& traj) {
    traj.validate();
    if (traj.manifold.kind != ManifoldKind::orthogonal)
        throw invalid_input_error("stepwise_estimates: expected an orthogonal trajectory");
    std::vector<Matrix> estimates;
    estimates.reserve(static_cast<std::size_t>(traj.steps()));
    for (int j = 0; j < traj.steps(); ++j)
        estimates.push_back(traj.points[j + 1] * traj.points[j].transpose());
    return estimates;
}

/// Trajectory-reconstruction cost on O(n): sum of squared bi-invariant
/// distances dist(Z_{j+1}, Phi Z_j)^2.
inline double orthogonal_cost(const Matrix& phi, const Trajectory& traj) {
    double total = 0.0;
    for (int j = 0; j < traj.steps(); ++j) {
        const double d = ortho_dist(OrthoMatrix(traj.points[j + 1]),
                                    OrthoMatrix(phi * traj.points[j]));
        total += d * d;
    }
    return total;
}

/// Barycentre estimator on O(n): Karcher mean of the per-step inversion
/// estimates. Karcher non-convergence is reported, not fatal.
inline EstimateReport estimate_orthogonal(const Trajectory& traj, double tol = 1e-10,
                                          int max_iter = 200) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<Matrix> estimates = stepwise_estimates(traj);
    const KarcherResult mean =
        karcher_mean_points(estimates, traj.manifold, tol, max_iter);

    EstimateReport report;
    report.phi_hat = mean.mean;
    report.final_cost = orthogonal_cost(report.phi_hat, traj);
    report.outer_iterations = mean.iterations;
    report.inner_steps = static_cast<int>(estimates.size());
    report.converged = mean.converged;
    report.tolerance_used = tol;
    if (traj.phi_true)
        report.error = ortho_dist(OrthoMatrix(*traj.phi_true), OrthoMatrix(mean.mean));
    report.wall_time_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
    return report;
}

/// Conjugate-gradient estimator on St(n, k) or Gr(n, k).
///
/// Each sweep assembles the gradient over the o(n) basis, Gram-Schmidt
/// orthogonalizes it against the directions already accepted this sweep,
/// line-searches tau in [-1, 1], and applies Phi <- Phi expm(-tau Delta).
/// Sweeps are capped at dim o(n) steps (then the history is cleared); the
/// run stops once ||Delta|| |tau| < tol. A degenerate Gram-Schmidt residual
/// restarts the sweep with a fresh gradient.
///
/// `cost_trace`, when given, records the accepted cost after every inner
/// step.
inline EstimateReport estimate_cg(const Trajectory& traj, const OrthoMatrix& phi0,
                                  const CGSettings& settings = {},
                                  std::vector<double>* cost_trace = nullptr) {
    settings.validate();
    const auto t0 = std::chrono::steady_clock::now();
    CostContext ctx(traj);
    const int n = traj.manifold.n;
    if (phi0.dim() != n) throw dimension_error("estimate_cg: phi0 must be n x n");

    const int dim_so_n = n * (n - 1) / 2;
    const int restart =
        settings.restart_period > 0 ? settings.restart_period : dim_so_n;
    std::span<const std::pair<int, int>> order(settings.basis_order);

    Matrix phi = phi0.mat();
    double cost = ctx.cost(phi);
    if (cost_trace) cost_trace->push_back(cost);

    EstimateReport report;
    report.tolerance_used = settings.tol;
    bool converged = false;
    int sweeps = 0;
    int inner_total = 0;

    while (sweeps < settings.max_outer && !converged) {
        ++sweeps;
        std::vector<AntisymMatrix> history;
        for (int step = 0; step < restart; ++step) {
            const AntisymMatrix grad = ctx.gradient(phi, order);
            const std::optional<AntisymMatrix> delta = gram_schmidt(grad, history);
            if (!delta) break;  // degenerate direction: restart the sweep

            const LineSearchResult ls = line_search(
                [&](double tau) {
                    return ctx.cost(phi * expm(Matrix(-tau * delta->mat())));
                },
                settings.line_search_grid);
            ++inner_total;
            if (ls.tau != 0.0) {
                phi = phi * expm(Matrix(-ls.tau * delta->mat()));
                cost = ls.value;
            }
            if (cost_trace) cost_trace->push_back(cost);
            if (delta->norm() * std::abs(ls.tau) < settings.tol) {
                converged = true;
                break;
            }
            history.push_back(*delta);
        }
    }

    report.phi_hat = reorthonormalize(phi);
    report.final_cost = cost;
    report.outer_iterations = sweeps;
    report.inner_steps = inner_total;
    report.converged = converged;
    if (traj.phi_true)
        report.error =
            ortho_dist(OrthoMatrix(*traj.phi_true), OrthoMatrix(report.phi_hat));
    report.wall_time_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
    return report;
}

}  // namespace manar
