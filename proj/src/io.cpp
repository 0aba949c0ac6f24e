#include "conic/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace conic {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json background_to_json(const BackgroundSolution& bg) {
    nlohmann::json j;
    j["gas"] = {{"pressure_coeff", bg.gas.pressure_coeff}, {"gamma", bg.gas.gamma}};
    j["freestream"] = {{"q0", bg.fs.speed},
                       {"rho0", bg.fs.density},
                       {"c0", bg.fs.sound_speed},
                       {"bernoulli", bg.fs.bernoulli}};
    j["b0"] = bg.b0;
    j["shock"] = {{"s0", bg.fit.s0},
                  {"alpha", bg.fit.alpha},
                  {"lambda1", bg.fit.lambda1},
                  {"lambda2", bg.fit.lambda2},
                  {"entropy_ok", bg.fit.entropy_ok},
                  {"post", {{"rho", bg.fit.post.rho},
                            {"u_r", bg.fit.post.u_r},
                            {"u_z", bg.fit.post.u_z}}}};
    j["tau0"] = bg.tau0;
    j["tau_table"] = bg.tau_table;
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& st : bg.table)
        nodes.push_back({st.s, st.rho, st.u_r, st.u_z});
    j["nodes"] = std::move(nodes);
    j["node_columns"] = {"s", "rho", "u_r", "u_z"};
    return j;
}

BackgroundSolution background_from_json(const nlohmann::json& j) {
    BackgroundSolution bg;
    bg.gas.pressure_coeff = j.at("gas").at("pressure_coeff").get<double>();
    bg.gas.gamma = j.at("gas").at("gamma").get<double>();
    bg.fs.speed = j.at("freestream").at("q0").get<double>();
    bg.fs.density = j.at("freestream").at("rho0").get<double>();
    bg.fs.sound_speed = j.at("freestream").at("c0").get<double>();
    bg.fs.bernoulli = j.at("freestream").at("bernoulli").get<double>();
    bg.b0 = j.at("b0").get<double>();
    const auto& sh = j.at("shock");
    bg.fit.s0 = sh.at("s0").get<double>();
    bg.fit.alpha = sh.at("alpha").get<double>();
    bg.fit.lambda1 = sh.at("lambda1").get<double>();
    bg.fit.lambda2 = sh.at("lambda2").get<double>();
    bg.fit.entropy_ok = sh.at("entropy_ok").get<bool>();
    bg.fit.post.s = bg.fit.s0;
    bg.fit.post.rho = sh.at("post").at("rho").get<double>();
    bg.fit.post.u_r = sh.at("post").at("u_r").get<double>();
    bg.fit.post.u_z = sh.at("post").at("u_z").get<double>();
    bg.tau0 = j.at("tau0").get<double>();
    bg.tau_table = j.at("tau_table").get<double>();
    for (const auto& node : j.at("nodes"))
        bg.table.push_back({node.at(0).get<double>(), node.at(1).get<double>(),
                            node.at(2).get<double>(), node.at(3).get<double>()});
    bg.build_interpolants();
    return bg;
}

std::string background_to_csv(const BackgroundSolution& bg) {
    std::string out = "s,rho,u_r,u_z,c,mach_z\n";
    for (const auto& st : bg.table) {
        double c = sound_speed(bg.gas, st.rho);
        out += format_double(st.s) + "," + format_double(st.rho) + "," +
               format_double(st.u_r) + "," + format_double(st.u_z) + "," +
               format_double(c) + "," + format_double(st.u_z / c) + "\n";
    }
    return out;
}

nlohmann::json rate_fit_to_json(const RateFit& fit) {
    nlohmann::json j;
    j["quantity"] = fit.quantity;
    j["exponent_fitted"] = fit.exponent_fitted;
    j["exponent_expected"] = fit.exponent_expected;
    j["exponent_min_rule"] = fit.exponent_min_rule;
    j["r_squared"] = fit.r_squared;
    j["constant"] = fit.constant;
    j["pass"] = fit.pass;
    j["b0q0"] = fit.b0q0;
    j["rel_error"] = fit.rel_error;
    return j;
}

std::string rate_fits_to_csv(const std::vector<RateFit>& fits) {
    std::string out = "quantity,b0q0,ode_value,asym_value,rel_error\n";
    for (const auto& fit : fits)
        for (std::size_t i = 0; i < fit.b0q0.size(); ++i)
            out += fit.quantity + "," + format_double(fit.b0q0[i]) + "," +
                   format_double(fit.ode_value[i]) + "," +
                   format_double(fit.asym_value[i]) + "," +
                   format_double(fit.rel_error[i]) + "\n";
    return out;
}

nlohmann::json multiplier_report_to_json(const MultiplierReport& rep) {
    nlohmann::json j;
    j["mu"] = rep.mu;
    j["verdict"] = rep.verdict;
    j["k_signs_ok"] = rep.k_signs_ok;
    j["lambda_window_ok"] = rep.lambda_window_ok;
    j["lambda_min_positive"] = rep.lambda_min_positive;
    j["cone_residual_zz"] = rep.cone_residual_zz;
    j["cone_residual_tt"] = rep.cone_residual_tt;
    j["beta"] = {rep.beta0, rep.beta1, rep.beta2, rep.beta3};
    j["Q1"] = rep.Q1;
    j["Q2"] = rep.Q2;
    j["Q0"] = rep.Q0;
    j["C3_closed"] = rep.C3_closed;
    j["C6_closed"] = rep.C6_closed;
    j["identity_gap"] = rep.identity_gap;
    j["s"] = rep.s;
    j["a"] = rep.a;
    j["b"] = rep.b;
    j["K1"] = rep.K1;
    j["K2"] = rep.K2;
    j["K3"] = rep.K3;
    j["K4"] = rep.K4;
    return j;
}

std::string multiplier_k_csv(const MultiplierReport& rep) {
    std::string out = "s,K1,K2,K3,K4,discriminant,lambda_min\n";
    for (std::size_t i = 0; i < rep.s.size(); ++i)
        out += format_double(rep.s[i]) + "," + format_double(rep.K1[i]) + "," +
               format_double(rep.K2[i]) + "," + format_double(rep.K3[i]) + "," +
               format_double(rep.K4[i]) + "," + format_double(rep.discriminant[i]) +
               "," + format_double(rep.lambda_min[i]) + "\n";
    return out;
}

nlohmann::json energy_report_to_json(const EnergyReport& rep,
                                     const EnergyVerdict& verdict) {
    nlohmann::json j;
    j["b0"] = rep.b0;
    j["s0"] = rep.s0;
    j["epsilon"] = rep.config.epsilon;
    j["mu"] = rep.config.mu;
    j["n_sigma"] = rep.config.n_sigma;
    j["n_theta"] = rep.config.n_theta;
    j["z_end"] = rep.config.z_end;
    j["completed"] = rep.completed;
    j["failure"] = rep.failure;
    j["failure_z"] = rep.failure_z;
    j["steps"] = rep.steps;
    j["m0"] = rep.m0;
    j["m0_r2"] = rep.m0_r2;
    j["m0_valid"] = rep.m0_valid;
    j["sup_weighted_slice_e0"] = rep.sup_weighted_slice_e0;
    j["sup_weighted_slice_e1"] = rep.sup_weighted_slice_e1;
    j["max_consistency"] = rep.max_consistency;
    if (!rep.series.empty()) {
        const auto& last = rep.series.back();
        j["cumulative_interior_energy"] = last.cum_interior;
        j["cumulative_shock_energy"] = last.cum_shock_dz + last.cum_shock_th;
        j["final_sup_grad"] = last.sup_grad;
        j["final_sup_xi"] = last.sup_xi;
    }
    j["verdict"] = {{"pass", verdict.pass},
                    {"saturation_ratio", verdict.saturation_ratio},
                    {"saturation_ok", verdict.saturation_ok},
                    {"shock_bound_const", verdict.shock_bound_const},
                    {"shock_bounded", verdict.shock_bounded},
                    {"hardy_trace_ratio", verdict.hardy_trace_ratio},
                    {"hardy_ok", verdict.hardy_ok}};
    return j;
}

std::string march_series_csv(const EnergyReport& rep) {
    std::string out = "z,sup_grad,sup_xi,E0,E1,shock_energy\n";
    for (const auto& r : rep.series)
        out += format_double(r.z) + "," + format_double(r.sup_grad) + "," +
               format_double(r.sup_xi) + "," + format_double(r.e0) + "," +
               format_double(r.e1) + "," + format_double(r.shock_energy) + "\n";
    return out;
}

void write_station_dump(const std::string& path, const PerturbationField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open dump file " + path);
    std::int64_t ns = f.n_sigma, nt = f.n_theta;
    out.write(reinterpret_cast<const char*>(&ns), sizeof ns);
    out.write(reinterpret_cast<const char*>(&nt), sizeof nt);
    out.write(reinterpret_cast<const char*>(&f.z), sizeof f.z);
    auto dump = [&](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    dump(f.phi);
    dump(f.u);
    dump(f.p);
    dump(f.w);
    dump(f.chi);
    std::vector<double> xi(f.n_theta);
    for (int j = 0; j < f.n_theta; ++j) xi[j] = f.xi(j);
    dump(xi);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + path);
    out << content;
}

}  // namespace conic
