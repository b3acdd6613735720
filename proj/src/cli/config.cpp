#include "bistab/cli/config.hpp"

#include <cmath>
#include <sstream>

#include "bistab/cli/table.hpp"
#include "bistab/units.hpp"

namespace bistab::cli {

using nlohmann::ordered_json;

const std::vector<KeySpec>& config_keys() {
    static const std::vector<KeySpec> keys = {
        {"physical.kappa_hz", KeyType::number, "Hz", "cavity decay rate kappa/2pi (HWHM)", 440e3, {}},
        {"physical.gamma_perp_hz", KeyType::number, "Hz", "transverse spin relaxation gamma_perp/2pi = 1/T2", 1.0 / 4.8e-6, {}},
        {"physical.gamma_par_hz", KeyType::number, "Hz", "longitudinal spin relaxation gamma_par/2pi", 6.25e-4, {}},
        {"physical.omega_coll_hz", KeyType::number, "Hz", "collective coupling Omega/2pi", 12.6e6, {}},
        {"physical.delta_c_hz", KeyType::number, "Hz", "cavity-probe detuning", 0.0, {}},
        {"ensemble.model", KeyType::string, "-", "spin ensemble model", "q_gaussian",
         {"q_gaussian", "homogeneous", "effective_homogeneous"}},
        {"ensemble.q", KeyType::number, "-", "q-Gaussian shape parameter, 1 < q < 3", 1.39, {}},
        {"ensemble.delta_width_hz", KeyType::number, "Hz", "q-Gaussian width Delta/2pi", 5.3e6, {}},
        {"ensemble.center_offset_hz", KeyType::number, "Hz", "ensemble center minus probe frequency", 0.0, {}},
        {"ensemble.cluster_count", KeyType::integer, "-", "number of spin clusters M (odd)", 1001, {}},
        {"ensemble.truncation_hz", KeyType::number, "Hz", "half window W/2pi; 0 means 8 Delta", 0.0, {}},
        {"integrator.rel_tol", KeyType::number, "-", "relative tolerance", 1e-8, {}},
        {"integrator.abs_tol", KeyType::number, "-", "absolute tolerance", 1e-16, {}},
        {"integrator.max_step_s", KeyType::number, "s", "largest step; 0 means unbounded", 0.0, {}},
        {"integrator.initial_step_s", KeyType::number, "s", "first step; 0 means automatic", 0.0, {}},
        {"integrator.handoff_time_s", KeyType::number, "s", "full to slaved switch; 0 means 1000/kappa", 0.0, {}},
        {"integrator.steady_threshold", KeyType::number, "gamma_par", "steady bound on |d ln|T|^2/dt|", 1e-6, {}},
        {"integrator.max_sim_time_s", KeyType::number, "s", "simulated horizon", 1e6, {}},
        {"integrator.samples_per_decade", KeyType::integer, "-", "log-spaced samples per time decade", 50, {}},
        {"integrator.first_sample_time_s", KeyType::number, "s", "first sample; 0 means 0.01/kappa", 0.0, {}},
        {"integrator.storage", KeyType::string, "-", "trajectory storage", "reduced", {"reduced", "full"}},
        {"integrator.overlap_factor", KeyType::number, "-", "full stage continues to factor * handoff", 2.0, {}},
        {"integrator.workers", KeyType::integer, "-", "quench worker threads; 0 means all cores", 0, {}},
        {"experiment.steady.power_min_db", KeyType::number, "dB", "lowest sweep power", -4.0, {}},
        {"experiment.steady.power_max_db", KeyType::number, "dB", "highest sweep power", 2.0, {}},
        {"experiment.steady.points", KeyType::integer, "-", "sweep powers (log spaced)", 41, {}},
        {"experiment.steady.reference", KeyType::flux_reference, "1/s", "dB reference: fold_upper, fold_lower or a flux",
         "fold_upper", {}},
        {"experiment.quench.prepare_factor", KeyType::number, "-", "p_prepare / fold_upper", 10.0, {}},
        {"experiment.quench.points", KeyType::integer, "-", "ladder size", 12, {}},
        {"experiment.quench.min_offset", KeyType::number, "-", "closest relative distance below P_crit", 1e-4, {}},
        {"experiment.quench.max_offset", KeyType::number, "-", "farthest relative distance below P_crit", 0.5, {}},
        {"experiment.quench.targets_flux", KeyType::number_list, "1/s", "explicit targets; empty uses the ladder",
         ordered_json::array(), {}},
        {"experiment.quench.fit_max_offset", KeyType::number, "-", "largest relative offset used by the fit", 3e-3, {}},
        {"experiment.quench.reference", KeyType::flux_reference, "1/s", "P_crit and dB reference", "fold_lower", {}},
        {"experiment.quench.write_trajectories", KeyType::boolean, "-", "emit trajectory_XX files", true, {}},
        {"experiment.adiabatic.c_coll", KeyType::number, "-", "cooperativity; < 0 uses the ensemble's C_coll", -1.0, {}},
        {"experiment.adiabatic.drive_db", KeyType::number, "dB", "drive relative to the upper fold", -1.0, {}},
        {"experiment.adiabatic.points", KeyType::integer, "-", "potential grid size", 401, {}},
        {"experiment.adiabatic.x_max_factor", KeyType::number, "-", "grid end in units of eta^2/kappa^2", 1.2, {}},
        {"output.dir", KeyType::string, "-", "output directory (env BISTAB_OUTPUT_DIR overrides)", "out", {}},
        {"output.format", KeyType::string, "-", "table format", "csv", {"csv", "json"}},
    };
    return keys;
}

std::string describe_keys() {
    std::ostringstream out;
    out << "Config keys (--set key=value, or a JSON file via --config):\n";
    for (const auto& k : config_keys()) {
        out << "  " << k.path << " [" << k.unit << "] = " << k.default_value.dump() << "  " << k.help;
        if (!k.choices.empty()) {
            out << " {";
            for (std::size_t i = 0; i < k.choices.size(); ++i) out << (i ? "|" : "") << k.choices[i];
            out << "}";
        }
        out << "\n";
    }
    return out.str();
}

namespace {

const KeySpec* find_key(const std::string& path) {
    for (const auto& k : config_keys())
        if (k.path == path) return &k;
    return nullptr;
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

void check_type(const KeySpec& k, const ordered_json& v) {
    bool ok = false;
    switch (k.type) {
        case KeyType::number: ok = v.is_number(); break;
        case KeyType::integer:
            ok = v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
            break;
        case KeyType::boolean: ok = v.is_boolean(); break;
        case KeyType::string:
            ok = v.is_string();
            if (ok && !k.choices.empty()) {
                ok = false;
                for (const auto& c : k.choices) ok = ok || v.get<std::string>() == c;
                if (!ok) throw ConfigError(k.path + ": unknown value " + v.dump());
            }
            break;
        case KeyType::number_list:
            ok = v.is_array();
            for (const auto& e : v) ok = ok && e.is_number();
            break;
        case KeyType::flux_reference:
            ok = v.is_number() || (v.is_string() && (v == "fold_upper" || v == "fold_lower"));
            break;
    }
    if (!ok) throw ConfigError(k.path + ": invalid value " + v.dump() + " (unit " + k.unit + ")");
}

void flatten(const ordered_json& doc, const std::string& prefix, std::vector<std::pair<std::string, ordered_json>>& out) {
    for (const auto& [key, value] : doc.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (value.is_object())
            flatten(value, path, out);
        else
            out.emplace_back(path, value);
    }
}

}  // namespace

ConfigDocument::ConfigDocument() : doc_(ordered_json::object()) {
    for (const auto& k : config_keys()) {
        ordered_json* node = &doc_;
        const auto parts = split_path(k.path);
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
        (*node)[parts.back()] = k.default_value;
    }
}

void ConfigDocument::set_path(const std::string& path, const ordered_json& value) {
    const KeySpec* k = find_key(path);
    if (!k) throw ConfigError(path + ": unknown config key");
    check_type(*k, value);
    ordered_json* node = &doc_;
    const auto parts = split_path(path);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    (*node)[parts.back()] = value;
}

void ConfigDocument::merge(const ordered_json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    std::vector<std::pair<std::string, ordered_json>> leaves;
    flatten(doc, "", leaves);
    for (const auto& [path, value] : leaves) set_path(path, value);
}

void ConfigDocument::merge_file(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    merge(doc);
}

void ConfigDocument::set(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + std::string(assignment) + "'");
    const std::string path(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    ordered_json value = ordered_json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    set_path(path, value);
}

std::vector<std::string> preset_names() { return {"weak", "intermediate", "strong"}; }

void ConfigDocument::apply_preset(std::string_view name) {
    if (name == "weak") {
        merge({{"physical", {{"kappa_hz", 1.2e6}, {"omega_coll_hz", 9.6e6}}}});
    } else if (name == "intermediate") {
        merge({{"physical", {{"kappa_hz", 0.44e6}, {"omega_coll_hz", 9.6e6}}}});
    } else if (name == "strong") {
        merge({{"physical", {{"kappa_hz", 0.44e6}, {"omega_coll_hz", 12.6e6}}}});
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
}

namespace {

double number(const ordered_json& doc, const std::string& path) {
    const ordered_json* node = &doc;
    for (const auto& p : split_path(path)) node = &node->at(p);
    return node->get<double>();
}

const ordered_json& node_at(const ordered_json& doc, const std::string& path) {
    const ordered_json* node = &doc;
    for (const auto& p : split_path(path)) node = &node->at(p);
    return *node;
}

void require(bool ok, const std::string& path, const std::string& what) {
    if (!ok) throw ConfigError(path + ": " + what);
}

FluxReference reference(const ordered_json& v, const std::string& path) {
    if (v.is_string()) return {v.get<std::string>(), 0.0};
    const double f = v.get<double>();
    require(f > 0.0, path, "reference flux must be > 0");
    return {"", f};
}

}  // namespace

RunConfig ConfigDocument::resolve() const {
    const auto& d = doc_;
    RunConfig c;
    auto rate = [&](const std::string& path) {
        const double v = number(d, path);
        require(v > 0.0 && std::isfinite(v), path, "must be > 0");
        return from_hz(v);
    };
    c.physical.kappa = rate("physical.kappa_hz");
    c.physical.gamma_perp = rate("physical.gamma_perp_hz");
    c.physical.gamma_par = rate("physical.gamma_par_hz");
    c.physical.omega_coll = rate("physical.omega_coll_hz");
    c.physical.delta_c = from_hz(number(d, "physical.delta_c_hz"));

    const auto model = node_at(d, "ensemble.model").get<std::string>();
    c.ensemble_model = model == "homogeneous"             ? EnsembleModel::homogeneous
                       : model == "effective_homogeneous" ? EnsembleModel::effective_homogeneous
                                                          : EnsembleModel::q_gaussian;
    c.ensemble.q = number(d, "ensemble.q");
    require(c.ensemble.q > 1.0 && c.ensemble.q < 3.0, "ensemble.q", "must lie in (1, 3)");
    c.ensemble.delta_width = rate("ensemble.delta_width_hz");
    c.ensemble.center_offset = from_hz(number(d, "ensemble.center_offset_hz"));
    const double m = number(d, "ensemble.cluster_count");
    require(m >= 1 && std::fmod(m, 2.0) == 1.0, "ensemble.cluster_count", "must be a positive odd integer");
    c.ensemble.cluster_count = static_cast<std::size_t>(m);
    const double w = number(d, "ensemble.truncation_hz");
    require(w >= 0.0, "ensemble.truncation_hz", "must be >= 0");
    if (w > 0.0) c.ensemble.truncation = from_hz(w);

    auto& ic = c.integrator;
    ic.rel_tol = number(d, "integrator.rel_tol");
    require(ic.rel_tol > 0.0 && ic.rel_tol < 1.0, "integrator.rel_tol", "must lie in (0, 1)");
    ic.abs_tol = number(d, "integrator.abs_tol");
    require(ic.abs_tol > 0.0 && ic.abs_tol < 1.0, "integrator.abs_tol", "must lie in (0, 1)");
    ic.max_step = number(d, "integrator.max_step_s");
    require(ic.max_step >= 0.0, "integrator.max_step_s", "must be >= 0");
    ic.initial_step = number(d, "integrator.initial_step_s");
    require(ic.initial_step >= 0.0, "integrator.initial_step_s", "must be >= 0");
    const double handoff = number(d, "integrator.handoff_time_s");
    require(handoff >= 0.0, "integrator.handoff_time_s", "must be >= 0");
    if (handoff > 0.0) ic.handoff_time = handoff;
    require(ic.handoff(c.physical) >= 100.0 / c.physical.kappa, "integrator.handoff_time_s", "must be >= 100/kappa");
    ic.steady_threshold = number(d, "integrator.steady_threshold");
    require(ic.steady_threshold > 0.0, "integrator.steady_threshold", "must be > 0");
    ic.max_sim_time = number(d, "integrator.max_sim_time_s");
    require(ic.max_sim_time > ic.handoff(c.physical), "integrator.max_sim_time_s", "must exceed the handoff time");
    ic.samples_per_decade = static_cast<int>(number(d, "integrator.samples_per_decade"));
    require(ic.samples_per_decade >= 1, "integrator.samples_per_decade", "must be >= 1");
    const double first = number(d, "integrator.first_sample_time_s");
    require(first >= 0.0, "integrator.first_sample_time_s", "must be >= 0");
    if (first > 0.0) ic.first_sample_time = first;
    ic.storage = node_at(d, "integrator.storage") == "full" ? Storage::full : Storage::reduced;
    ic.overlap_factor = number(d, "integrator.overlap_factor");
    require(ic.overlap_factor >= 1.0, "integrator.overlap_factor", "must be >= 1");
    const double workers = number(d, "integrator.workers");
    require(workers >= 0.0, "integrator.workers", "must be >= 0");
    ic.workers = static_cast<std::size_t>(workers);

    auto& st = c.steady;
    st.power_min_db = number(d, "experiment.steady.power_min_db");
    st.power_max_db = number(d, "experiment.steady.power_max_db");
    require(st.power_max_db > st.power_min_db, "experiment.steady.power_max_db", "must exceed power_min_db");
    st.points = static_cast<int>(number(d, "experiment.steady.points"));
    require(st.points >= 2, "experiment.steady.points", "must be >= 2 (empty power grid)");
    st.reference = reference(node_at(d, "experiment.steady.reference"), "experiment.steady.reference");

    auto& q = c.quench;
    q.prepare_factor = number(d, "experiment.quench.prepare_factor");
    require(q.prepare_factor > 1.0, "experiment.quench.prepare_factor", "must be > 1");
    q.points = static_cast<int>(number(d, "experiment.quench.points"));
    require(q.points >= 1, "experiment.quench.points", "must be >= 1");
    q.min_offset = number(d, "experiment.quench.min_offset");
    q.max_offset = number(d, "experiment.quench.max_offset");
    require(q.min_offset > 0.0 && q.min_offset < 1.0, "experiment.quench.min_offset", "must lie in (0, 1)");
    require(q.max_offset >= q.min_offset && q.max_offset < 1.0, "experiment.quench.max_offset",
            "must lie in [min_offset, 1)");
    q.targets_flux = node_at(d, "experiment.quench.targets_flux").get<std::vector<double>>();
    for (double t : q.targets_flux) require(t > 0.0, "experiment.quench.targets_flux", "targets must be > 0");
    q.fit_max_offset = number(d, "experiment.quench.fit_max_offset");
    require(q.fit_max_offset > 0.0, "experiment.quench.fit_max_offset", "must be > 0");
    q.reference = reference(node_at(d, "experiment.quench.reference"), "experiment.quench.reference");
    q.write_trajectories = node_at(d, "experiment.quench.write_trajectories").get<bool>();

    auto& a = c.adiabatic;
    a.c_coll = number(d, "experiment.adiabatic.c_coll");
    a.drive_db = number(d, "experiment.adiabatic.drive_db");
    a.points = static_cast<int>(number(d, "experiment.adiabatic.points"));
    require(a.points >= 3, "experiment.adiabatic.points", "must be >= 3");
    a.x_max_factor = number(d, "experiment.adiabatic.x_max_factor");
    require(a.x_max_factor > 0.0, "experiment.adiabatic.x_max_factor", "must be > 0");

    c.output_dir = node_at(d, "output.dir").get<std::string>();
    c.format = node_at(d, "output.format") == "json" ? OutputFormat::json : OutputFormat::csv;

    try {
        validate(c.physical);
        validate(c.ensemble);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return c;
}

SpinClusters RunConfig::clusters() const {
    switch (ensemble_model) {
        case EnsembleModel::homogeneous:
            return SpinClusters::homogeneous(physical.omega_coll, ensemble.center_offset);
        case EnsembleModel::effective_homogeneous: {
            const auto full = discretize(ensemble, physical.omega_coll);
            const double c = cooperativity(full, physical.kappa, physical.gamma_perp).collective;
            return effective_homogeneous(c, physical.kappa, physical.gamma_perp);
        }
        default: return discretize(ensemble, physical.omega_coll);
    }
}

}  // namespace bistab::cli
