#pragma once

#include <string>

#include <json.hpp>

#include "conic/asymptotics.hpp"
#include "conic/background.hpp"
#include "conic/perturb.hpp"
#include "conic/stability.hpp"

namespace conic {

// All doubles are emitted with 17 significant digits so identical inputs give
// byte-identical artifacts.
std::string format_double(double v);

nlohmann::json background_to_json(const BackgroundSolution& bg);
BackgroundSolution background_from_json(const nlohmann::json& j);
std::string background_to_csv(const BackgroundSolution& bg);

nlohmann::json rate_fit_to_json(const RateFit& fit);
std::string rate_fits_to_csv(const std::vector<RateFit>& fits);

nlohmann::json multiplier_report_to_json(const MultiplierReport& rep);
std::string multiplier_k_csv(const MultiplierReport& rep);

nlohmann::json energy_report_to_json(const EnergyReport& rep,
                                     const EnergyVerdict& verdict);
std::string march_series_csv(const EnergyReport& rep);

// Raw station dump: int64 n_sigma, int64 n_theta, float64 z, then the four
// grids (phi, u, p, w) row-major in sigma, then chi and xi per theta.
void write_station_dump(const std::string& path, const PerturbationField& f);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace conic
