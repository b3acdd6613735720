#include "bistab/cli/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <limits>

#include "bistab/adiabatic.hpp"
#include "bistab/ensemble.hpp"
#include "bistab/units.hpp"

namespace bistab::cli {

using nlohmann::ordered_json;

namespace {

constexpr PowerWindow everything{std::numeric_limits<double>::min(), std::numeric_limits<double>::max()};

std::string table_name(const std::string& stem, OutputFormat f) {
    return stem + (f == OutputFormat::json ? ".json" : ".csv");
}

void write_table(const RunConfig& c, const std::string& stem, const Table& t) {
    const auto path = c.output_dir / table_name(stem, c.format);
    write_file(path, c.format == OutputFormat::json ? dump(t.to_json()) : t.to_csv());
}

Table read_table(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    if (path.extension() == ".json") return Table::from_json(ordered_json::parse(text));
    return Table::from_csv(text);
}

Cell opt(const std::optional<double>& v) {
    if (v) return *v;
    return std::monostate{};
}

}  // namespace

double crossover_flux(const SteadyStateModel& model) {
    const double d0 = std::abs(model.denominator(0.0));
    const double dinf = std::hypot(model.params().kappa, model.params().delta_c);
    const double target = std::sqrt(d0 * dinf);
    double lo = -700.0, hi = 700.0;  // log x
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (std::abs(model.denominator(std::exp(mid))) > target)
            lo = mid;
        else
            hi = mid;
    }
    return model.drive_sq(std::exp(0.5 * (lo + hi))) / model.params().kappa;
}

ResolvedReference resolve_reference(const FluxReference& ref, const SteadyStateModel& model) {
    if (ref.name.empty()) return {ref.flux, "explicit"};
    if (auto f = find_folds(model, everything)) return {ref.name == "fold_lower" ? f->lower : f->upper, ref.name};
    if (model.collective_cooperativity() > 0.0) return {crossover_flux(model), "crossover"};
    return {1.0, "unit_flux"};
}

std::vector<double> ladder_targets(const QuenchExperiment& q, double p_crit) {
    if (!q.targets_flux.empty()) return q.targets_flux;
    std::vector<double> out;
    const double l0 = std::log10(q.max_offset), l1 = std::log10(q.min_offset);
    for (int k = 0; k < q.points; ++k) {
        const double d = q.points == 1 ? q.min_offset : std::pow(10.0, l0 + (l1 - l0) * k / (q.points - 1));
        out.push_back(p_crit * (1.0 - d));
    }
    return out;
}

std::vector<std::pair<double, double>> fit_points(const Table& summary, double p_crit, double fit_max_offset) {
    const auto ip = summary.column("p_target_flux");
    const auto is = summary.column("t_switch_s");
    const auto ib = summary.column("branch");
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : summary.rows) {
        const auto* p = std::get_if<double>(&row[ip]);
        const auto* t = std::get_if<double>(&row[is]);
        const auto* b = std::get_if<std::string>(&row[ib]);
        if (!p || !t || !b || *b != "lower") continue;
        if (*p < p_crit && (p_crit - *p) / p_crit <= fit_max_offset) pts.emplace_back(*p, *t);
    }
    return pts;
}

ordered_json scaling_fit_json(const ScalingFitResult& fit, std::size_t points) {
    auto one = [](const ScalingFit& f) {
        return ordered_json{{"alpha", f.alpha},
                            {"p_crit", f.p_crit},
                            {"prefactor", f.prefactor},
                            {"residual", f.residual_norm},
                            {"mode", f.mode}};
    };
    ordered_json out = one(fit.fixed);
    out["points"] = points;
    out["free"] = fit.free ? one(*fit.free) : ordered_json(nullptr);
    return out;
}

Table diagram_table(const BistabilityDiagram& d, double ref) {
    Table t{{"power_flux", "power_db", "branch", "intensity", "transmission_db", "stability"}, {}};
    auto add = [&](const std::vector<BranchPoint>& pts, const char* branch) {
        for (const auto& p : pts)
            t.add_row({p.p_in, to_db(p.p_in / ref), std::string(branch), p.intensity, to_db(p.transmission),
                       std::string(to_string(p.stability))});
    };
    add(d.up_branch, "up");
    add(d.down_branch, "down");
    add(d.unstable, "unstable");
    return t;
}

Table trajectory_table(const Trajectory& traj) {
    Table t{{"time_s", "transmission", "transmission_db", "mean_inversion", "decay_rate"}, {}};
    for (const auto& r : traj.records)
        t.add_row({r.time, r.transmission, to_db(r.transmission), r.mean_inversion, r.decay_rate()});
    return t;
}

Table summary_table(const std::vector<QuenchResult>& results, double ref) {
    Table t{{"p_target_flux", "p_target_db", "t_steady_s", "t_switch_s", "branch", "handoff_deviation"}, {}};
    for (const auto& r : results)
        t.add_row({r.p_target, to_db(r.p_target / ref), opt(r.t_steady), opt(r.t_switch),
                   std::string(to_string(r.final_state_branch)), opt(r.handoff_deviation)});
    return t;
}

void cmd_steady(const RunConfig& c, std::ostream& log) {
    const auto clusters = c.clusters();
    const SteadyStateModel model(c.physical, clusters);
    const auto ref = resolve_reference(c.steady.reference, model);

    std::vector<double> grid;
    const auto& s = c.steady;
    for (int k = 0; k < s.points; ++k)
        grid.push_back(ref.flux * from_db(s.power_min_db + (s.power_max_db - s.power_min_db) * k / (s.points - 1)));
    const auto diagram = hysteresis_sweep(grid, model);
    write_table(c, "steady_diagram", diagram_table(diagram, ref.flux));

    const double cc = model.collective_cooperativity();
    const auto asym = asymptotes(cc);
    ordered_json report{{"c_coll", cc},
                        {"cluster_count", clusters.size()},
                        {"reference", {{"label", ref.label}, {"flux", ref.flux}}},
                        {"asymptotes", {{"t_low_sq", asym.low}, {"t_high_sq", asym.high}}}};
    if (auto f = find_folds(model, everything)) {
        report["status"] = "bistable";
        report["fold_lower_flux"] = f->lower;
        report["fold_upper_flux"] = f->upper;
        report["fold_lower_db"] = to_db(f->lower / ref.flux);
        report["fold_upper_db"] = to_db(f->upper / ref.flux);
        report["window_db"] = to_db(f->upper / f->lower);
        report["intensity_at_lower"] = f->intensity_at_lower;
        report["intensity_at_upper"] = f->intensity_at_upper;
        report["folds_inside_grid"] = diagram.fold_lower.has_value();
        log << "bistable: C_coll = " << cc << ", window " << to_db(f->upper / f->lower) << " dB\n";
    } else {
        report["status"] = "monostable";
        log << "monostable: C_coll = " << cc << "\n";
    }
    write_file(c.output_dir / "fold_report.json", dump(report));
}

void cmd_quench(const RunConfig& c, std::ostream& log) {
    const auto clusters = c.clusters();
    const SteadyStateModel model(c.physical, clusters);
    const auto p_crit = resolve_reference(c.quench.reference, model);
    const auto folds = find_folds(model, everything);
    const double p_prepare = c.quench.prepare_factor * (folds ? folds->upper : p_crit.flux);

    const auto targets = ladder_targets(c.quench, p_crit.flux);
    log << "quench ladder: " << targets.size() << " targets below " << p_crit.label << " = " << p_crit.flux
        << " photons/s\n";
    const auto results = quench_ladder(p_prepare, targets, c.physical, clusters, c.integrator);

    if (c.quench.write_trajectories) {
        for (std::size_t i = 0; i < results.size(); ++i) {
            char stem[32];
            std::snprintf(stem, sizeof stem, "trajectory_%02zu", i);
            write_table(c, stem, trajectory_table(results[i].trajectory));
        }
    }
    const Table summary = summary_table(results, p_crit.flux);
    write_table(c, "quench_summary", summary);
    for (const auto& r : results) {
        log << "  p = " << r.p_target << "  " << to_string(r.final_state_branch);
        if (r.t_switch) log << "  t_switch = " << *r.t_switch << " s";
        if (r.t_steady) log << "  t_steady = " << *r.t_steady << " s";
        log << "\n";
    }

    const auto pts = fit_points(summary, p_crit.flux, c.quench.fit_max_offset);
    if (pts.size() < 4) {
        log << "scaling fit skipped: " << pts.size() << " eligible points (need 4)\n";
        return;
    }
    const auto fit = fit_scaling(pts, p_crit.flux);
    write_file(c.output_dir / "scaling_fit.json", dump(scaling_fit_json(fit, pts.size())));
    log << "alpha = " << fit.fixed.alpha << " (fixed P_crit)";
    if (fit.free) log << ", " << fit.free->alpha << " (free P_crit)";
    log << "\n";
}

void cmd_fit(const RunConfig& c, const std::filesystem::path& summary_path, std::ostream& log) {
    const auto clusters = c.clusters();
    const SteadyStateModel model(c.physical, clusters);
    const auto p_crit = resolve_reference(c.quench.reference, model);
    const Table summary = read_table(summary_path);
    const auto pts = fit_points(summary, p_crit.flux, c.quench.fit_max_offset);
    const auto fit = fit_scaling(pts, p_crit.flux);
    write_file(c.output_dir / "scaling_fit.json", dump(scaling_fit_json(fit, pts.size())));
    log << "alpha = " << fit.fixed.alpha << " from " << pts.size() << " points\n";
}

void cmd_adiabatic(const RunConfig& c, std::ostream& log) {
    double cc = c.adiabatic.c_coll;
    if (cc < 0.0) cc = cooperativity(c.clusters(), c.physical.kappa, c.physical.gamma_perp).collective;
    PhysicalParams p = c.physical;
    p.delta_c = 0.0;
    const auto hom = effective_homogeneous(cc, p.kappa, p.gamma_perp);
    const SteadyStateModel model(p, hom);
    const auto ref = resolve_reference({"fold_upper", 0.0}, model);
    const double p_in = ref.flux * from_db(c.adiabatic.drive_db);
    const double eta = drive_from_power(p_in, p.kappa);
    const AdiabaticModel am{cc, p.kappa, p.gamma_par, eta};

    const auto fps = adiabatic_fixed_points(am);
    ordered_json list = ordered_json::array();
    std::size_t driven = 0;
    for (const auto& f : fps) {
        list.push_back({{"intensity", f.intensity},
                        {"transmission", transmission_from_intensity(f.intensity, eta, p.kappa)},
                        {"stability", std::string(to_string(f.stability))},
                        {"degenerate", f.degenerate}});
        driven += f.degenerate ? 0 : 1;
    }
    ordered_json report{{"c_coll", cc},
                        {"p_in_flux", p_in},
                        {"eta", eta},
                        {"reference", {{"label", ref.label}, {"flux", ref.flux}}},
                        {"driven_count", driven},
                        {"fixed_points", list}};
    write_file(c.output_dir / "fixed_points.json", dump(report));

    const double x_max = c.adiabatic.x_max_factor * eta * eta / (p.kappa * p.kappa);
    std::vector<double> grid;
    for (int k = 0; k < c.adiabatic.points; ++k) grid.push_back(x_max * k / (c.adiabatic.points - 1));
    const auto v = potential(grid, am);
    Table t{{"x", "V", "rhs"}, {}};
    for (std::size_t k = 0; k < grid.size(); ++k) t.add_row({grid[k], v[k], adiabatic_rhs(grid[k], am)});
    write_table(c, "potential", t);
    log << fps.size() << " fixed points (" << driven << " driven) at C = " << cc << ", P_in = " << p_in << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"bistab: driven cavity coupled to a broadened spin ensemble"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Expand all help");

    std::string config_file, preset, output_dir, fit_input;
    std::vector<std::string> sets;
    const std::string keys = describe_keys();
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_file, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("-s,--set", sets, "override a key: section.key=value")->take_all();
        sub->add_option("-p,--preset", preset, "parameter preset")->check(CLI::IsMember(preset_names()));
        sub->add_option("-o,--output-dir", output_dir, "output directory");
        sub->footer(keys);
    };
    auto* steady = app.add_subcommand("steady", "steady-state hysteresis sweep and fold report");
    auto* quench_cmd = app.add_subcommand("quench", "quench ladder, switching times and scaling fit");
    auto* adiabatic = app.add_subcommand("adiabatic", "fixed points and potential of the giant-spin model");
    auto* fit = app.add_subcommand("fit", "scaling fit of an existing quench summary");
    for (auto* sub : {steady, quench_cmd, adiabatic, fit}) add_common(sub);
    fit->add_option("-i,--input", fit_input, "quench summary table (default: <output>/quench_summary.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    RunConfig cfg;
    try {
        ConfigDocument doc;
        if (!preset.empty()) doc.apply_preset(preset);
        if (!config_file.empty()) doc.merge_file(config_file);
        for (const auto& s : sets) doc.set(s);
        cfg = doc.resolve();
        if (const char* env = std::getenv("BISTAB_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        validate(cfg.integrator, cfg.physical);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (steady->parsed()) cmd_steady(cfg, std::cout);
        if (quench_cmd->parsed()) cmd_quench(cfg, std::cout);
        if (adiabatic->parsed()) cmd_adiabatic(cfg, std::cout);
        if (fit->parsed()) {
            const std::filesystem::path in =
                fit_input.empty() ? cfg.output_dir / table_name("quench_summary", cfg.format) : std::filesystem::path(fit_input);
            cmd_fit(cfg, in, std::cout);
        }
    } catch (const ContractViolation& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace bistab::cli
