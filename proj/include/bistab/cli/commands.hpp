#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "bistab/analysis.hpp"
#include "bistab/cli/config.hpp"
#include "bistab/cli/table.hpp"
#include "bistab/steady_state.hpp"

namespace bistab::cli {

struct ResolvedReference {
    double flux = 0.0;
    std::string label;  ///< fold_upper, fold_lower, crossover, unit_flux or explicit
};

/// Named folds fall back to the transmission crossover |T|^2 = |T_low| |T_high|
/// when the model is monostable, and to 1/s without spins.
ResolvedReference resolve_reference(const FluxReference& ref, const SteadyStateModel& model);

/// Power where |T|^2 reaches the geometric mean of its two asymptotes.
double crossover_flux(const SteadyStateModel& model);

/// Powers (1 - delta) p_crit with delta log spaced from max_offset down to min_offset.
std::vector<double> ladder_targets(const QuenchExperiment& q, double p_crit);

/// (p, t_switch) pairs on the lower branch within fit_max_offset of p_crit.
std::vector<std::pair<double, double>> fit_points(const Table& summary, double p_crit, double fit_max_offset);

nlohmann::ordered_json scaling_fit_json(const ScalingFitResult& fit, std::size_t points);

Table diagram_table(const BistabilityDiagram& d, double reference_flux);
Table trajectory_table(const Trajectory& traj);
Table summary_table(const std::vector<QuenchResult>& results, double reference_flux);

/// Each writes its files into config.output_dir and a short report to `log`.
void cmd_steady(const RunConfig& config, std::ostream& log);
void cmd_quench(const RunConfig& config, std::ostream& log);
void cmd_adiabatic(const RunConfig& config, std::ostream& log);
void cmd_fit(const RunConfig& config, const std::filesystem::path& summary, std::ostream& log);

/// Exit codes: 0 success, 2 configuration error, 3 numerical failure.
int run(int argc, char** argv);

}  // namespace bistab::cli
