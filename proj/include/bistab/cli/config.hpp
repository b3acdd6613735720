#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bistab/dynamics.hpp"
#include "bistab/ensemble.hpp"
#include "bistab/error.hpp"
#include "bistab/model.hpp"

namespace bistab::cli {

/// Bad key, bad type or out-of-range value; the message names the field path.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class KeyType { number, integer, boolean, string, number_list, flux_reference };

struct KeySpec {
    std::string path;  ///< dotted, e.g. "physical.kappa_hz"
    KeyType type;
    std::string unit;
    std::string help;
    nlohmann::ordered_json default_value;
    std::vector<std::string> choices;  ///< for enumerated strings
};

const std::vector<KeySpec>& config_keys();

/// Every key with its unit and default, one per line.
std::string describe_keys();

enum class EnsembleModel { q_gaussian, homogeneous, effective_homogeneous };
enum class OutputFormat { csv, json };

/// Either a named fold or a flux in photons/s.
struct FluxReference {
    std::string name;  ///< "fold_upper", "fold_lower" or empty
    double flux = 0.0;
};

struct SteadyExperiment {
    double power_min_db = -4.0;
    double power_max_db = 2.0;
    int points = 41;
    FluxReference reference{"fold_upper", 0.0};
};

struct QuenchExperiment {
    double prepare_factor = 10.0;  ///< p_prepare = factor * fold_upper
    int points = 12;
    double min_offset = 1e-4;  ///< relative distance below P_crit, log spaced
    double max_offset = 0.5;
    std::vector<double> targets_flux;  ///< explicit targets override the ladder
    double fit_max_offset = 3e-3;
    FluxReference reference{"fold_lower", 0.0};
    bool write_trajectories = true;
};

struct AdiabaticExperiment {
    double c_coll = -1.0;      ///< < 0: collective cooperativity of the configured ensemble
    double drive_db = -1.0;    ///< relative to the homogeneous model's upper fold
    int points = 401;
    double x_max_factor = 1.2; ///< grid spans [0, factor * eta^2 / kappa^2]
};

struct RunConfig {
    PhysicalParams physical;
    EnsembleModel ensemble_model = EnsembleModel::q_gaussian;
    EnsembleSpec ensemble;
    IntegratorConfig integrator;
    SteadyExperiment steady;
    QuenchExperiment quench;
    AdiabaticExperiment adiabatic;
    std::filesystem::path output_dir = "out";
    OutputFormat format = OutputFormat::csv;

    SpinClusters clusters() const;
};

/// Layered document: defaults, preset, file, overrides.
class ConfigDocument {
public:
    ConfigDocument();

    void apply_preset(std::string_view name);
    void merge_file(const std::filesystem::path& path);
    void merge(const nlohmann::ordered_json& doc);
    /// "section.key=value"; value parsed as JSON, else taken as a string.
    void set(std::string_view assignment);

    const nlohmann::ordered_json& json() const noexcept { return doc_; }
    RunConfig resolve() const;

private:
    void set_path(const std::string& path, const nlohmann::ordered_json& value);
    nlohmann::ordered_json doc_;
};

std::vector<std::string> preset_names();

}  // namespace bistab::cli
