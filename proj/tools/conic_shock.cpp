// Command-line front end: background solves, shock-polar scans, hypersonic
// rate fits, multiplier verdicts, trace-inequality checks, and the perturbed
// marching simulator.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "conic/asymptotics.hpp"
#include "conic/background.hpp"
#include "conic/io.hpp"
#include "conic/perturb.hpp"
#include "conic/stability.hpp"

using namespace conic;
namespace fs_sys = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitVerdict = 2;

struct CommonParams {
    double gamma = 1.4;
    double pressure_coeff = 1.0;
    double rho0 = 1.0;
    double q0 = 50.0;
    double b0 = 0.1;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonParams& p) {
    cmd->add_option("--gamma", p.gamma, "adiabatic exponent, 1 < gamma < 3");
    cmd->add_option("--A", p.pressure_coeff, "pressure coefficient");
    cmd->add_option("--rho0", p.rho0, "upstream density");
    cmd->add_option("--q0", p.q0, "upstream speed");
    cmd->add_option("--b0", p.b0, "cone slope");
    cmd->add_option("--out", p.out_dir, "output directory");
}

void write_artifact(const std::string& dir, const std::string& name,
                    const std::string& content) {
    fs_sys::create_directories(dir);
    write_text_file((fs_sys::path(dir) / name).string(), content);
}

// Values in the JSON config file take precedence over command-line flags.
void apply_config(const nlohmann::json& cfg, CommonParams& p) {
    if (cfg.contains("gamma")) p.gamma = cfg["gamma"].get<double>();
    if (cfg.contains("A")) p.pressure_coeff = cfg["A"].get<double>();
    if (cfg.contains("rho0")) p.rho0 = cfg["rho0"].get<double>();
    if (cfg.contains("q0")) p.q0 = cfg["q0"].get<double>();
    if (cfg.contains("b0")) p.b0 = cfg["b0"].get<double>();
    if (cfg.contains("out")) p.out_dir = cfg["out"].get<std::string>();
}

void apply_march_config(const nlohmann::json& cfg, MarchConfig& m) {
    if (cfg.contains("epsilon")) m.epsilon = cfg["epsilon"].get<double>();
    if (cfg.contains("z_start")) m.z_start = cfg["z_start"].get<double>();
    if (cfg.contains("z_end")) m.z_end = cfg["z_end"].get<double>();
    if (cfg.contains("n_sigma")) m.n_sigma = cfg["n_sigma"].get<int>();
    if (cfg.contains("n_theta")) m.n_theta = cfg["n_theta"].get<int>();
    if (cfg.contains("cfl")) m.cfl = cfg["cfl"].get<double>();
    if (cfg.contains("mu")) m.mu = cfg["mu"].get<double>();
    if (cfg.contains("support_lo")) m.support_lo = cfg["support_lo"].get<double>();
    if (cfg.contains("support_hi")) m.support_hi = cfg["support_hi"].get<double>();
    if (cfg.contains("xi0_scale")) m.xi0_scale = cfg["xi0_scale"].get<double>();
    if (cfg.contains("theta_phase")) m.theta_phase = cfg["theta_phase"].get<double>();
    if (cfg.contains("seed")) m.seed = cfg["seed"].get<std::uint64_t>();
    if (cfg.contains("dissipation")) m.dissipation = cfg["dissipation"].get<double>();
    if (cfg.contains("record_stride"))
        m.record_stride = cfg["record_stride"].get<int>();
}

int sweep_threads() {
    if (const char* env = std::getenv("CONIC_SHOCK_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::vector<double> geometric_list(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i)
        v.push_back(lo * std::pow(hi / lo, (n > 1) ? double(i) / (n - 1) : 0.0));
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conic-shock: self-similar conic shock solver and stability toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON config file; its values override flags");

    CommonParams P;

    // ---- solve ----
    auto* solve = app.add_subcommand("solve", "background conical-shock solve");
    add_common(solve, P);
    int solve_nodes = 2000;
    bool solve_rk45 = false;
    solve->add_option("--nodes", solve_nodes, "table resolution");
    solve->add_flag("--rk45", solve_rk45, "use the adaptive 4/5 integrator");

    // ---- polar ----
    auto* polar = app.add_subcommand("polar", "shock polar / apple-curve scan");
    add_common(polar, P);
    int polar_samples = 96;
    polar->add_option("--samples", polar_samples, "number of shock-slope samples");

    // ---- asymptotics ----
    auto* asym = app.add_subcommand("asymptotics", "hypersonic remainder-rate fits");
    add_common(asym, P);
    double bq_lo = 25.0, bq_hi = 400.0;
    int bq_n = 5;
    asym->add_option("--bq-min", bq_lo, "smallest b0*q0");
    asym->add_option("--bq-max", bq_hi, "largest b0*q0");
    asym->add_option("--bq-count", bq_n, "sweep points");

    // ---- stability ----
    auto* stab = app.add_subcommand("stability", "multiplier construction verdict");
    add_common(stab, P);
    double stab_mu = -1.5;
    stab->add_option("--mu", stab_mu, "weight exponent (< -1)");

    // ---- hardy ----
    auto* hardy = app.add_subcommand("hardy", "weighted trace inequality check");
    double hardy_mu = -1.5, hardy_T = 100.0;
    int hardy_n = 200;
    std::uint64_t hardy_seed = 12345;
    hardy->add_option("--mu", hardy_mu, "weight exponent (< -1)");
    hardy->add_option("--T", hardy_T, "interval end");
    hardy->add_option("--samples", hardy_n, "number of random samples");
    hardy->add_option("--seed", hardy_seed, "random seed");

    // ---- march ----
    auto* march = app.add_subcommand("march", "perturbed shock-fitted march");
    add_common(march, P);
    MarchConfig M;
    march->add_option("--epsilon", M.epsilon, "perturbation amplitude");
    march->add_option("--z-end", M.z_end, "final station");
    march->add_option("--n-sigma", M.n_sigma, "radial nodes");
    march->add_option("--n-theta", M.n_theta, "angular nodes (1 or even >= 8)");
    march->add_option("--cfl", M.cfl, "Courant number (0, 0.9]");
    march->add_option("--mu", M.mu, "diagnostic weight exponent");
    march->add_option("--seed", M.seed, "initial-profile randomization seed");
    march->add_option("--theta-phase", M.theta_phase, "bump rotation");
    march->add_option("--xi0-scale", M.xi0_scale, "initial shock displacement scale");
    march->add_option("--dissipation", M.dissipation, "filter coefficient");
    march->add_option("--record-stride", M.record_stride, "station record stride");
    march->add_option("--dump-every", M.dump_every,
                      "write a binary station dump every K records (0 = off)");

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "concurrent parameter sweep");
    add_common(sweep, P);
    std::vector<double> sw_gammas{1.4};
    std::vector<double> sw_b0s{0.1};
    std::vector<double> sw_bqs{25.0, 100.0, 400.0};
    std::string sw_op = "solve";
    double sw_mu = -1.5;
    sweep->add_option("--op", sw_op, "solve or stability");
    sweep->add_option("--gamma-list", sw_gammas, "gamma values");
    sweep->add_option("--b0-list", sw_b0s, "cone slopes");
    sweep->add_option("--bq-list", sw_bqs, "b0*q0 values");
    sweep->add_option("--mu", sw_mu, "weight exponent for stability sweeps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitInput : kExitOk;
    }

    nlohmann::json cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "cannot open config file " << config_path << "\n";
            return kExitInput;
        }
        try {
            in >> cfg;
        } catch (const std::exception& e) {
            std::cerr << "malformed config: " << e.what() << "\n";
            return kExitInput;
        }
        apply_config(cfg, P);
    }

    try {
        if (*solve) {
            GasModel gas{P.pressure_coeff, P.gamma};
            Freestream fs = make_freestream(gas, P.q0, P.rho0);
            SolveOptions opt;
            opt.integ.nodes = solve_nodes;
            if (solve_rk45) opt.integ.kind = IntegratorKind::rk45;
            BackgroundSolution bg = shoot_attached_shock(P.b0, gas, fs, opt);
            write_artifact(P.out_dir, "background.json", background_to_json(bg).dump(2));
            write_artifact(P.out_dir, "background.csv", background_to_csv(bg));
            std::printf("s0 = %.15g\n", bg.fit.s0);
            std::printf("alpha = %.15g\n", bg.fit.alpha);
            std::printf("tangency residual = %.3e\n", bg.tangency_error());
            std::printf("bernoulli drift = %.3e\n", bg.max_bernoulli_drift());
            std::printf("entropy: lambda1 = %.6g < s0 < lambda2 = %.6g : %s\n",
                        bg.fit.lambda1, bg.fit.lambda2,
                        bg.fit.entropy_ok ? "ok" : "VIOLATED");
            return kExitOk;
        }

        if (*polar) {
            GasModel gas{P.pressure_coeff, P.gamma};
            Freestream fs = make_freestream(gas, P.q0, P.rho0);
            auto curve = apple_curve(gas, fs, polar_samples);
            std::string csv = "s0,cone_angle,u_z_cone,u_r_cone\n";
            for (const auto& s : curve)
                csv += format_double(s.s0) + "," + format_double(s.cone_angle) + "," +
                       format_double(s.u_z_cone) + "," + format_double(s.u_r_cone) +
                       "\n";
            write_artifact(P.out_dir, "apple_curve.csv", csv);
            double crit = critical_angle(gas, fs);
            nlohmann::json j;
            j["critical_angle"] = crit;
            j["supersonic_z_threshold"] = supersonic_z_threshold(P.gamma);
            write_artifact(P.out_dir, "critical.json", j.dump(2));
            std::printf("critical angle (attachment scan) = %.10g\n", crit);
            std::printf("supersonic-in-z threshold b_* = %.10g\n",
                        supersonic_z_threshold(P.gamma));
            return kExitOk;
        }

        if (*asym) {
            GasModel gas{P.pressure_coeff, P.gamma};
            auto bqs = geometric_list(bq_lo, bq_hi, bq_n);
            std::vector<double> q0s;
            for (double bq : bqs) q0s.push_back(bq / P.b0);
            std::vector<RateFit> fits;
            bool all_pass = true;
            for (LayerQuantity q :
                 {LayerQuantity::shock_slope_gap, LayerQuantity::u_r,
                  LayerQuantity::u_z, LayerQuantity::rho,
                  LayerQuantity::q_sq_minus_c_sq, LayerQuantity::u_z_sq_minus_c_sq,
                  LayerQuantity::denominator, LayerQuantity::du_r,
                  LayerQuantity::du_z, LayerQuantity::lambda1_minus_s,
                  LayerQuantity::lambda2_minus_s}) {
                RateFit fit = fit_remainder_rate(q, P.b0, gas, q0s);
                std::printf("%-12s fitted %+7.3f expected %+7.3f (min-rule %+7.3f) "
                            "r2=%.4f const=%.3g %s\n",
                            fit.quantity.c_str(), fit.exponent_fitted,
                            fit.exponent_expected, fit.exponent_min_rule,
                            fit.r_squared, fit.constant,
                            fit.pass ? "pass" : "FAIL");
                all_pass = all_pass && fit.pass;
                fits.push_back(std::move(fit));
            }
            nlohmann::json j = nlohmann::json::array();
            for (const auto& f : fits) j.push_back(rate_fit_to_json(f));
            write_artifact(P.out_dir, "rate_fits.json", j.dump(2));
            write_artifact(P.out_dir, "rate_sweep.csv", rate_fits_to_csv(fits));
            return all_pass ? kExitOk : kExitVerdict;
        }

        if (*stab) {
            GasModel gas{P.pressure_coeff, P.gamma};
            Freestream fs = make_freestream(gas, P.q0, P.rho0);
            BackgroundSolution bg = shoot_attached_shock(P.b0, gas, fs);
            MultiplierReport rep = multiplier_eval(bg, stab_mu);
            write_artifact(P.out_dir, "multiplier.json",
                           multiplier_report_to_json(rep).dump(2));
            write_artifact(P.out_dir, "multiplier_k.csv", multiplier_k_csv(rep));
            std::printf("verdict: %s (K signs %d, window %d, lambda_min %d, "
                        "Q0 = %.6g, cone residual %.2e/%.2e)\n",
                        rep.verdict ? "pass" : "FAIL", rep.k_signs_ok,
                        rep.lambda_window_ok, rep.lambda_min_positive, rep.Q0,
                        rep.cone_residual_zz, rep.cone_residual_tt);
            return rep.verdict ? kExitOk : kExitVerdict;
        }

        if (*hardy) {
            auto samples = hardy_default_samples(hardy_mu, hardy_T, hardy_n, hardy_seed);
            HardyResult res = hardy_check(samples, hardy_mu, hardy_T);
            std::printf("worst ratio = %.12f (%s) over %zu samples\n",
                        res.worst_ratio, res.worst_label.c_str(), res.ratios.size());
            return (res.worst_ratio <= 1.0 + 1e-10) ? kExitOk : kExitVerdict;
        }

        if (*march) {
            if (!config_path.empty()) apply_march_config(cfg, M);
            GasModel gas{P.pressure_coeff, P.gamma};
            Freestream fs = make_freestream(gas, P.q0, P.rho0);
            BackgroundSolution bg = shoot_attached_shock(P.b0, gas, fs);
            if (M.dump_every > 0 && M.dump_dir.empty()) M.dump_dir = P.out_dir;
            if (!M.dump_dir.empty()) fs_sys::create_directories(M.dump_dir);
            EnergyReport rep = run_march(M, bg);
            EnergyVerdict verdict = energy_diagnostics(rep, M.mu);
            write_artifact(P.out_dir, "march.csv", march_series_csv(rep));
            write_artifact(P.out_dir, "march.json",
                           energy_report_to_json(rep, verdict).dump(2));
            if (!rep.completed) {
                std::printf("march failed at z = %.6g: %s\n", rep.failure_z,
                            rep.failure.c_str());
                return kExitVerdict;
            }
            std::printf("completed %lld steps to z = %.6g\n",
                        static_cast<long long>(rep.steps), rep.series.back().z);
            if (rep.m0_valid)
                std::printf("decay exponent m0 = %.4f (r2 = %.4f)\n", rep.m0,
                            rep.m0_r2);
            std::printf("energy verdict: %s (saturation %.4f, hardy %.4f)\n",
                        verdict.pass ? "pass" : "FAIL", verdict.saturation_ratio,
                        verdict.hardy_trace_ratio);
            return verdict.pass ? kExitOk : kExitVerdict;
        }

        if (*sweep) {
            struct Job {
                double gamma, b0, bq;
            };
            std::vector<Job> jobs;
            for (double g : sw_gammas)
                for (double b : sw_b0s)
                    for (double bq : sw_bqs) jobs.push_back({g, b, bq});
            std::atomic<std::size_t> next{0};
            std::atomic<int> failures{0};
            std::mutex io_mutex;
            std::string summary = "gamma,b0,q0,s0,alpha,verdict\n";
            int nthreads = std::min<int>(sweep_threads(), int(jobs.size()));
            auto worker = [&]() {
                for (;;) {
                    std::size_t k = next.fetch_add(1);
                    if (k >= jobs.size()) break;
                    const Job& job = jobs[k];
                    std::string row;
                    try {
                        GasModel gas{P.pressure_coeff, job.gamma};
                        double q0 = job.bq / job.b0;
                        Freestream fs = make_freestream(gas, q0, P.rho0);
                        BackgroundSolution bg = shoot_attached_shock(job.b0, gas, fs);
                        bool ok = true;
                        if (sw_op == "stability")
                            ok = multiplier_eval(bg, sw_mu).verdict;
                        if (!ok) failures.fetch_add(1);
                        row = format_double(job.gamma) + "," + format_double(job.b0) +
                              "," + format_double(q0) + "," +
                              format_double(bg.fit.s0) + "," +
                              format_double(bg.fit.alpha) + "," +
                              (ok ? "pass" : "fail") + "\n";
                    } catch (const std::exception& e) {
                        failures.fetch_add(1);
                        row = format_double(job.gamma) + "," + format_double(job.b0) +
                              ",,,," + std::string("error: ") + e.what() + "\n";
                    }
                    std::lock_guard<std::mutex> lock(io_mutex);
                    summary += row;
                }
            };
            std::vector<std::thread> pool;
            for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
            write_artifact(P.out_dir, "sweep.csv", summary);
            std::printf("%zu runs, %d failures\n", jobs.size(), failures.load());
            return failures.load() == 0 ? kExitOk : kExitVerdict;
        }
    } catch (const std::domain_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitOk;
}
