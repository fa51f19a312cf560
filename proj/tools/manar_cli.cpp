// Command-line front end: simulate AR(1) trajectories, estimate system
// parameters, run seeded experiment sweeps, and audit gradients.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "manar/manar.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

manar::Manifold make_manifold(const std::string& kind_name, int n, int k) {
    const manar::ManifoldKind kind = manar::manifold_kind_from_string(kind_name);
    switch (kind) {
        case manar::ManifoldKind::orthogonal: return manar::Manifold::orthogonal(n);
        case manar::ManifoldKind::stiefel: return manar::Manifold::stiefel(n, k);
        case manar::ManifoldKind::grassmann: return manar::Manifold::grassmann(n, k);
    }
    throw manar::invalid_input_error("unknown manifold");
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty())
        std::cout << text;
    else
        manar::write_text_file(out_path, text);
}

manar::Matrix parse_phi0(const std::string& path, int n) {
    const manar::json doc = manar::json::parse(manar::read_text_file(path));
    if (doc.is_array()) return manar::matrix_from_json(doc, n, n);
    if (doc.contains("phi")) return manar::matrix_from_json(doc.at("phi"), n, n);
    if (doc.contains("phi_hat")) return manar::matrix_from_json(doc.at("phi_hat"), n, n);
    throw manar::invalid_input_error(
        "phi0 file must be a flat row-major array or an object with 'phi' or 'phi_hat'");
}

int run(int argc, char** argv) {
    CLI::App app{"AR(1) simulation and system identification on O(n), St(n,k), Gr(n,k)"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a trajectory and emit it as JSON");
    std::string sim_manifold = "orthogonal";
    int sim_n = 8, sim_k = 2, sim_steps = 50;
    double sim_sigma = 1e-2, sim_scale = 0.01;
    std::uint64_t sim_seed = 0;
    std::string sim_out;
    sim->add_option("--manifold", sim_manifold, "orthogonal | stiefel | grassmann");
    sim->add_option("--n", sim_n, "ambient dimension");
    sim->add_option("--k", sim_k, "columns (Stiefel/Grassmann)");
    sim->add_option("--steps", sim_steps, "number of steps N");
    sim->add_option("--sigma", sim_sigma, "noise scale");
    sim->add_option("--scale", sim_scale, "spread of dist(Phi, I) for the sampled parameter");
    sim->add_option("--seed", sim_seed, "random seed");
    sim->add_option("--out", sim_out, "output path (default: stdout)");

    // estimate
    auto* est = app.add_subcommand("estimate",
                                   "read a trajectory JSON, emit an estimate report JSON");
    std::string est_config, est_phi0, est_out;
    double est_tol = 0.0;
    est->add_option("--config", est_config, "trajectory JSON path (default: stdin)");
    est->add_option("--phi0", est_phi0, "initial guess JSON path (default: identity)");
    est->add_option("--tol", est_tol, "estimator tolerance");
    est->add_option("--out", est_out, "output path (default: stdout)");

    // sweep
    auto* swp = app.add_subcommand("sweep", "run an experiment grid, emit CSV or JSON rows");
    std::string swp_config, swp_out, swp_format = "csv";
    std::string swp_manifold, swp_n, swp_k, swp_steps, swp_sigma;
    int swp_trials = -1;
    double swp_tol = 0.0;
    std::uint64_t swp_seed = 0;
    bool swp_seed_set = false;
    swp->add_option("--config", swp_config, "SweepConfig JSON path");
    swp->add_option("--manifold", swp_manifold, "manifold (when no config file)");
    swp->add_option("--n", swp_n, "comma-separated n values");
    swp->add_option("--k", swp_k, "comma-separated k values");
    swp->add_option("--steps", swp_steps, "comma-separated N values");
    swp->add_option("--sigma", swp_sigma, "comma-separated sigma values");
    swp->add_option("--trials", swp_trials, "trials per cell");
    swp->add_option("--seed", swp_seed, "master seed")->each([&](const std::string&) {
        swp_seed_set = true;
    });
    swp->add_option("--tol", swp_tol, "estimator tolerance");
    swp->add_option("--out", swp_out, "output path (default: config's out, else stdout)");
    swp->add_option("--format", swp_format, "csv | json");

    // check-grad
    auto* chk = app.add_subcommand("check-grad",
                                   "finite-difference gradient audit; nonzero exit on failure");
    std::string chk_manifold = "both";
    int chk_n = 6, chk_k = 2, chk_steps = 5, chk_trials = 20;
    std::uint64_t chk_seed = 0;
    double chk_tol = 1e-5;
    chk->add_option("--manifold", chk_manifold, "stiefel | grassmann | both");
    chk->add_option("--n", chk_n, "ambient dimension");
    chk->add_option("--k", chk_k, "columns");
    chk->add_option("--steps", chk_steps, "trajectory steps per configuration");
    chk->add_option("--trials", chk_trials, "number of random configurations");
    chk->add_option("--seed", chk_seed, "random seed");
    chk->add_option("--tol", chk_tol, "max allowed relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInvalidConfig;
    }

    if (sim->parsed()) {
        manar::RandomStream rng(sim_seed);
        manar::ProcessSpec spec;
        spec.manifold = make_manifold(sim_manifold, sim_n, sim_k);
        spec.phi = manar::sample_system_parameter(sim_n, sim_scale, rng).mat();
        spec.sigma = sim_sigma;
        spec.steps = sim_steps;
        spec.start = manar::Matrix::Identity(sim_n, spec.manifold.point_cols());
        spec.seed = rng.next_u64();
        const manar::Trajectory traj = manar::simulate_ar1(spec);
        write_output(sim_out, manar::trajectory_to_json(traj).dump(2) + "\n");
        return kExitOk;
    }

    if (est->parsed()) {
        std::string text;
        if (est_config.empty()) {
            std::ostringstream buf;
            buf << std::cin.rdbuf();
            text = buf.str();
        } else {
            text = manar::read_text_file(est_config);
        }
        manar::Trajectory traj;
        try {
            traj = manar::trajectory_from_json(manar::json::parse(text));
        } catch (const manar::error&) {
            throw;
        } catch (const std::exception& e) {
            throw manar::invalid_input_error(std::string("bad trajectory JSON: ") + e.what());
        }

        manar::EstimateReport report;
        if (traj.manifold.kind == manar::ManifoldKind::orthogonal) {
            report = manar::estimate_orthogonal(traj, est_tol > 0 ? est_tol : 1e-10);
        } else {
            manar::CGSettings settings;
            if (est_tol > 0) settings.tol = est_tol;
            const manar::OrthoMatrix phi0 =
                est_phi0.empty()
                    ? manar::OrthoMatrix::identity(traj.manifold.n)
                    : manar::OrthoMatrix(parse_phi0(est_phi0, traj.manifold.n));
            report = manar::estimate_cg(traj, phi0, settings);
        }
        write_output(est_out, manar::report_to_json(report).dump(2) + "\n");
        return kExitOk;
    }

    if (swp->parsed()) {
        manar::SweepConfig cfg;
        if (!swp_config.empty()) {
            try {
                cfg = manar::sweep_config_from_json(
                    manar::json::parse(manar::read_text_file(swp_config)));
            } catch (const manar::error&) {
                throw;
            } catch (const std::exception& e) {
                throw manar::invalid_input_error(std::string("bad sweep config: ") + e.what());
            }
        } else {
            if (swp_manifold.empty() || swp_n.empty() || swp_steps.empty() || swp_sigma.empty())
                throw manar::invalid_input_error(
                    "sweep: provide --config or all of --manifold/--n/--steps/--sigma");
            cfg.kind = manar::manifold_kind_from_string(swp_manifold);
            cfg.n_values = parse_int_list(swp_n);
            if (!swp_k.empty()) cfg.k_values = parse_int_list(swp_k);
            cfg.step_values = parse_int_list(swp_steps);
            cfg.sigma_values = parse_double_list(swp_sigma);
        }
        if (swp_trials > 0) cfg.trials = swp_trials;
        if (swp_seed_set) cfg.master_seed = swp_seed;
        if (swp_tol > 0) {
            cfg.cg.tol = swp_tol;
            cfg.karcher_tol = swp_tol;
        }
        cfg.validate();

        const std::vector<manar::ResultRow> rows = manar::run_sweep(cfg);
        const std::string out = !swp_out.empty() ? swp_out : cfg.out_path;
        const manar::EmitFormat format = manar::emit_format_from_string(swp_format);
        if (out.empty()) {
            std::cout << (format == manar::EmitFormat::csv
                              ? manar::rows_to_csv(rows)
                              : manar::rows_to_json(rows).dump(2) + "\n");
        } else {
            manar::emit(rows, format, out);
        }
        return kExitOk;
    }

    if (chk->parsed()) {
        std::vector<manar::ManifoldKind> kinds;
        if (chk_manifold == "both") {
            kinds = {manar::ManifoldKind::stiefel, manar::ManifoldKind::grassmann};
        } else {
            kinds = {manar::manifold_kind_from_string(chk_manifold)};
        }
        bool all_pass = true;
        for (const manar::ManifoldKind kind : kinds) {
            const manar::GradientAuditResult audit = manar::gradient_audit(
                kind, chk_n, chk_k, chk_steps, chk_trials, chk_seed, 1e-5, chk_tol);
            std::cout << manar::to_string(kind) << "(" << chk_n << "," << chk_k << "): "
                      << audit.configs << " configurations, max relative error "
                      << audit.max_rel_error << (audit.pass ? "  [ok]" : "  [FAIL]") << "\n";
            all_pass = all_pass && audit.pass;
        }
        return all_pass ? kExitOk : kExitNumerical;
    }

    return kExitInvalidConfig;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const manar::io_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const manar::invalid_input_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitInvalidConfig;
    } catch (const manar::dimension_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitInvalidConfig;
    } catch (const manar::insufficient_data_error& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitInvalidConfig;
    } catch (const manar::error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidConfig;
    }
}
