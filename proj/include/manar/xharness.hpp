#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "manar/arproc.hpp"
#include "manar/serialize.hpp"
#include "manar/sysid.hpp"

namespace manar {

/// Grid of experiment cells: the cartesian product of the value lists, with
/// `trials` independent runs per cell.
struct SweepConfig {
    ManifoldKind kind = ManifoldKind::stiefel;
    std::vector<int> n_values;
    std::vector<int> k_values;
    std::vector<int> step_values;
    std::vector<double> sigma_values;
    int trials = 10;
    std::uint64_t master_seed = 0;
    double phi_scale = 0.01;  // spread of dist(Phi, I_n) for sampled parameters
    CGSettings cg;            // Stiefel/Grassmann estimator settings
    double karcher_tol = 1e-10;  // orthogonal estimator settings
    int karcher_max_iter = 200;
    std::string out_path;

    void validate() const {
        if (n_values.empty() || step_values.empty() || sigma_values.empty())
            throw invalid_input_error("SweepConfig: n, steps, and sigma lists must be nonempty");
        if (kind != ManifoldKind::orthogonal && k_values.empty())
            throw invalid_input_error("SweepConfig: k list must be nonempty");
        if (trials < 1) throw invalid_input_error("SweepConfig: trials must be >= 1");
        if (phi_scale <= 0) throw invalid_input_error("SweepConfig: phi_scale must be > 0");
        cg.validate();
        for (int n : n_values) {
            if (n < 2) throw invalid_input_error("SweepConfig: need n >= 2");
            if (kind != ManifoldKind::orthogonal)
                for (int k : k_values)
                    if (k < 1 || k >= n)
                        throw invalid_input_error("SweepConfig: need 1 <= k < n for every combination");
        }
        for (int s : step_values)
            if (s < 1) throw invalid_input_error("SweepConfig: need steps >= 1");
        for (double s : sigma_values)
            if (s < 0) throw invalid_input_error("SweepConfig: need sigma >= 0");
    }
};

/// One plotted point: one trial of one grid cell.
struct ResultRow {
    ManifoldKind kind = ManifoldKind::stiefel;
    int n = 0;
    int k = 0;
    int steps = 0;
    double sigma = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    double error = 0.0;
    double final_cost = 0.0;
    int iterations = 0;
    bool converged = false;
    double runtime_ms = 0.0;
};

/// Trial seeds are derived from the cell's *contents*, not its position in
/// the grid, so removing a cell never changes any other cell's rows.
inline std::uint64_t derive_trial_seed(std::uint64_t master_seed, ManifoldKind kind, int n,
                                       int k, int steps, double sigma, int trial) {
    const std::uint64_t cell =
        RandomStream::derive_seed(static_cast<std::uint64_t>(kind) + 0x51,
                                  (static_cast<std::uint64_t>(n) << 42) ^
                                      (static_cast<std::uint64_t>(k) << 21) ^
                                      static_cast<std::uint64_t>(steps),
                                  std::bit_cast<std::uint64_t>(sigma));
    return RandomStream::derive_seed(master_seed, cell, static_cast<std::uint64_t>(trial));
}

/// Run one trial: sample Phi near I_n, simulate from the canonical start
/// point, estimate with the manifold-appropriate estimator.
inline ResultRow run_trial(const SweepConfig& cfg, int n, int k, int steps, double sigma,
                           int trial) {
    ResultRow row;
    row.kind = cfg.kind;
    row.n = n;
    row.k = cfg.kind == ManifoldKind::orthogonal ? n : k;
    row.steps = steps;
    row.sigma = sigma;
    row.trial = trial;
    row.seed = derive_trial_seed(cfg.master_seed, cfg.kind, n, row.k, steps, sigma, trial);

    const auto t0 = std::chrono::steady_clock::now();
    try {
        RandomStream rng(row.seed);
        const OrthoMatrix phi = sample_system_parameter(n, cfg.phi_scale, rng);

        ProcessSpec spec;
        switch (cfg.kind) {
            case ManifoldKind::orthogonal: spec.manifold = Manifold::orthogonal(n); break;
            case ManifoldKind::stiefel: spec.manifold = Manifold::stiefel(n, k); break;
            case ManifoldKind::grassmann: spec.manifold = Manifold::grassmann(n, k); break;
        }
        spec.phi = phi.mat();
        spec.sigma = sigma;
        spec.steps = steps;
        spec.start = Matrix::Identity(n, spec.manifold.point_cols());
        spec.seed = rng.next_u64();

        const Trajectory traj = simulate_ar1(spec);
        const EstimateReport report =
            cfg.kind == ManifoldKind::orthogonal
                ? estimate_orthogonal(traj, cfg.karcher_tol, cfg.karcher_max_iter)
                : estimate_cg(traj, OrthoMatrix::identity(n), cfg.cg);

        row.error = report.error.value_or(std::numeric_limits<double>::quiet_NaN());
        row.final_cost = report.final_cost;
        row.iterations = report.outer_iterations;
        row.converged = report.converged;
    } catch (const error&) {
        // A failed trial is a data point, not a reason to stop the sweep.
        row.error = std::numeric_limits<double>::quiet_NaN();
        row.final_cost = std::numeric_limits<double>::quiet_NaN();
        row.iterations = 0;
        row.converged = false;
    }
    row.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return row;
}

/// Execute the full grid in (n, k, steps, sigma, trial) order. Output is
/// deterministic for a fixed config (runtime_ms aside, which is wall time).
inline std::vector<ResultRow> run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    std::vector<ResultRow> rows;
    const std::vector<int> ks =
        cfg.kind == ManifoldKind::orthogonal ? std::vector<int>{0} : cfg.k_values;
    for (int n : cfg.n_values)
        for (int k : ks)
            for (int steps : cfg.step_values)
                for (double sigma : cfg.sigma_values)
                    for (int trial = 0; trial < cfg.trials; ++trial)
                        rows.push_back(run_trial(cfg, n, k, steps, sigma, trial));
    return rows;
}

enum class FitField { steps, sigma, n, k };

inline double fit_field_value(const ResultRow& row, FitField field) {
    switch (field) {
        case FitField::steps: return static_cast<double>(row.steps);
        case FitField::sigma: return row.sigma;
        case FitField::n: return static_cast<double>(row.n);
        case FitField::k: return static_cast<double>(row.k);
    }
    return 0.0;
}

struct SlopeFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
};

/// Ordinary least squares of log(mean error per x) against log(x).
inline SlopeFit fit_slope(const std::vector<ResultRow>& rows, FitField field) {
    std::vector<double> xs;
    std::vector<double> sums;
    std::vector<int> counts;
    for (const ResultRow& row : rows) {
        if (!std::isfinite(row.error)) continue;
        const double x = fit_field_value(row, field);
        auto it = std::find(xs.begin(), xs.end(), x);
        if (it == xs.end()) {
            xs.push_back(x);
            sums.push_back(row.error);
            counts.push_back(1);
        } else {
            const auto idx = static_cast<std::size_t>(it - xs.begin());
            sums[idx] += row.error;
            counts[idx] += 1;
        }
    }
    if (xs.size() < 3)
        throw insufficient_data_error("fit_slope: need at least 3 distinct x values");

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double mean = sums[i] / counts[i];
        if (!(xs[i] > 0) || !(mean > 0))
            throw insufficient_data_error("fit_slope: need positive x and positive errors");
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(mean));
    }
    const auto m = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    double ssr = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (my + fit.slope * (lx[i] - mx));
        ssr += r * r;
    }
    fit.stderr_slope = lx.size() > 2 ? std::sqrt(ssr / (m - 2.0) / sxx) : 0.0;
    return fit;
}

enum class EmitFormat { csv, json };

inline EmitFormat emit_format_from_string(const std::string& name) {
    if (name == "csv") return EmitFormat::csv;
    if (name == "json") return EmitFormat::json;
    throw invalid_input_error("unknown format '" + name + "' (expected csv or json)");
}

namespace detail {

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline constexpr const char* kResultCsvHeader =
    "manifold,n,k,N,sigma,trial,seed,error,final_cost,iterations,converged,runtime_ms";

inline std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::string out = kResultCsvHeader;
    out += '\n';
    for (const ResultRow& row : rows) {
        out += to_string(row.kind);
        out += ',' + std::to_string(row.n);
        out += ',' + std::to_string(row.k);
        out += ',' + std::to_string(row.steps);
        out += ',' + detail::format_g17(row.sigma);
        out += ',' + std::to_string(row.trial);
        out += ',' + std::to_string(row.seed);
        out += ',' + detail::format_g17(row.error);
        out += ',' + detail::format_g17(row.final_cost);
        out += ',' + std::to_string(row.iterations);
        out += row.converged ? ",true" : ",false";
        out += ',' + detail::format_g17(row.runtime_ms);
        out += '\n';
    }
    return out;
}

inline json rows_to_json(const std::vector<ResultRow>& rows) {
    json arr = json::array();
    for (const ResultRow& row : rows) {
        json obj;
        obj["manifold"] = to_string(row.kind);
        obj["n"] = row.n;
        obj["k"] = row.k;
        obj["N"] = row.steps;
        obj["sigma"] = row.sigma;
        obj["trial"] = row.trial;
        obj["seed"] = row.seed;
        obj["error"] = row.error;
        obj["final_cost"] = row.final_cost;
        obj["iterations"] = row.iterations;
        obj["converged"] = row.converged;
        obj["runtime_ms"] = row.runtime_ms;
        arr.push_back(obj);
    }
    return arr;
}

/// Write rows to `path` in the requested format.
inline void emit(const std::vector<ResultRow>& rows, EmitFormat format,
                 const std::string& path) {
    if (format == EmitFormat::csv) {
        write_text_file(path, rows_to_csv(rows));
    } else {
        write_text_file(path, rows_to_json(rows).dump(2) + "\n");
    }
}

/// Parse rows back from the CSV emitted above.
inline std::vector<ResultRow> rows_from_csv(const std::string& text) {
    std::vector<ResultRow> rows;
    std::size_t pos = 0;
    auto next_line = [&]() -> std::string {
        if (pos >= text.size()) return {};
        const std::size_t end = text.find('\n', pos);
        std::string line = text.substr(pos, end == std::string::npos ? end : end - pos);
        pos = end == std::string::npos ? text.size() : end + 1;
        return line;
    };
    const std::string header = next_line();
    if (header != kResultCsvHeader)
        throw invalid_input_error("rows_from_csv: unexpected header: " + header);
    while (pos < text.size()) {
        const std::string line = next_line();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string::npos
                                                    ? comma
                                                    : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 12)
            throw invalid_input_error("rows_from_csv: expected 12 fields, got " +
                                      std::to_string(fields.size()));
        ResultRow row;
        row.kind = manifold_kind_from_string(fields[0]);
        row.n = std::stoi(fields[1]);
        row.k = std::stoi(fields[2]);
        row.steps = std::stoi(fields[3]);
        row.sigma = std::stod(fields[4]);
        row.trial = std::stoi(fields[5]);
        row.seed = std::stoull(fields[6]);
        row.error = std::stod(fields[7]);
        row.final_cost = std::stod(fields[8]);
        row.iterations = std::stoi(fields[9]);
        row.converged = fields[10] == "true";
        row.runtime_ms = std::stod(fields[11]);
        rows.push_back(row);
    }
    return rows;
}

namespace detail {

inline std::vector<int> int_list(const json& v) {
    std::vector<int> out;
    if (v.is_array())
        for (const json& x : v) out.push_back(x.get<int>());
    else
        out.push_back(v.get<int>());
    return out;
}

inline std::vector<double> double_list(const json& v) {
    std::vector<double> out;
    if (v.is_array())
        for (const json& x : v) out.push_back(x.get<double>());
    else
        out.push_back(v.get<double>());
    return out;
}

}  // namespace detail

/// Parse a SweepConfig from its JSON document. Scalar values are accepted
/// wherever a list is expected.
inline SweepConfig sweep_config_from_json(const json& doc) {
    SweepConfig cfg;
    cfg.kind = manifold_kind_from_string(doc.at("manifold").get<std::string>());
    cfg.n_values = detail::int_list(doc.at("n"));
    if (doc.contains("k")) cfg.k_values = detail::int_list(doc.at("k"));
    cfg.step_values = detail::int_list(doc.at("steps"));
    cfg.sigma_values = detail::double_list(doc.at("sigma"));
    if (doc.contains("trials")) cfg.trials = doc.at("trials").get<int>();
    if (doc.contains("master_seed")) cfg.master_seed = doc.at("master_seed").get<std::uint64_t>();
    if (doc.contains("phi_scale")) cfg.phi_scale = doc.at("phi_scale").get<double>();
    if (doc.contains("karcher_tol")) cfg.karcher_tol = doc.at("karcher_tol").get<double>();
    if (doc.contains("karcher_max_iter"))
        cfg.karcher_max_iter = doc.at("karcher_max_iter").get<int>();
    if (doc.contains("cg")) {
        const json& cg = doc.at("cg");
        if (cg.contains("tol")) cfg.cg.tol = cg.at("tol").get<double>();
        if (cg.contains("max_outer")) cfg.cg.max_outer = cg.at("max_outer").get<int>();
        if (cg.contains("line_search_grid"))
            cfg.cg.line_search_grid = cg.at("line_search_grid").get<int>();
        if (cg.contains("restart_period"))
            cfg.cg.restart_period = cg.at("restart_period").get<int>();
    }
    if (doc.contains("out")) cfg.out_path = doc.at("out").get<std::string>();
    cfg.validate();
    return cfg;
}

/// Central-difference audit of the St/Gr gradients over random
/// configurations. Per configuration: a fresh system parameter and noisy
/// trajectory, a generic evaluation point, and a comparison of every
/// assembled gradient coefficient against (f(phi e^{h e}) - f(phi e^{-h e}))/2h.
struct GradientAuditResult {
    int configs = 0;
    double max_rel_error = 0.0;
    bool pass = false;
    std::vector<double> per_config;
};

inline GradientAuditResult gradient_audit(ManifoldKind kind, int n, int k, int steps,
                                          int configs, std::uint64_t seed,
                                          double h = 1e-5, double tol = 1e-5) {
    if (kind == ManifoldKind::orthogonal)
        throw invalid_input_error("gradient_audit: expected stiefel or grassmann");
    GradientAuditResult result;
    result.configs = configs;
    const std::vector<AntisymMatrix> basis = so_basis(n);
    for (int c = 0; c < configs; ++c) {
        RandomStream rng = RandomStream(seed).substream(0xAD17, static_cast<std::uint64_t>(c));
        ProcessSpec spec;
        spec.manifold = kind == ManifoldKind::stiefel ? Manifold::stiefel(n, k)
                                                      : Manifold::grassmann(n, k);
        spec.phi = sample_system_parameter(n, 0.2, rng).mat();
        spec.sigma = 0.02 + 0.05 * rng.uniform();
        spec.steps = steps;
        spec.start = Matrix::Identity(n, k);
        spec.seed = rng.next_u64();
        const Trajectory traj = simulate_ar1(spec);
        const CostContext ctx(traj);

        // Generic evaluation point away from the optimum.
        const Matrix phi = sample_system_parameter(n, 0.2, rng).mat();
        const AntisymMatrix grad = ctx.gradient(phi);

        double max_abs_coeff = 0.0;
        double max_err = 0.0;
        for (const AntisymMatrix& e : basis) {
            const double analytic = frobenius(grad.mat(), e.mat());
            const double fplus = ctx.cost(phi * expm(Matrix(h * e.mat())));
            const double fminus = ctx.cost(phi * expm(Matrix(-h * e.mat())));
            const double fd = (fplus - fminus) / (2.0 * h);
            max_abs_coeff = std::max(max_abs_coeff, std::abs(analytic));
            max_err = std::max(max_err, std::abs(analytic - fd));
        }
        const double rel = max_err / std::max(1.0, max_abs_coeff);
        result.per_config.push_back(rel);
        result.max_rel_error = std::max(result.max_rel_error, rel);
    }
    result.pass = result.max_rel_error <= tol;
    return result;
}

}  // namespace manar
