// Command-line front end: synth, emissions, estimate, simulate, report.
//
// Exit codes: 0 success, 2 validation error, 3 numerical error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "airtax/econometrics.hpp"
#include "airtax/emissions.hpp"
#include "airtax/market_data.hpp"
#include "airtax/scenario.hpp"
#include "airtax/tax_scenario.hpp"

namespace fs = std::filesystem;
using namespace airtax;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

bool on_off(const std::string& v) { return v == "on"; }

struct SynthArgs {
    std::uint64_t seed = 42;
    int routes = 200;
    int periods = 132;
    double noise_sd = 0.3;
    std::string out_dir;
};

struct EmissionsArgs {
    std::string from;
    std::string to;
    std::string aircraft_class = "narrow";
    std::string airports;
    std::string fuel_tables;
    std::string emission_factors;
    int seats = 180;
    double load_factor = 0.8;
};

struct EstimateArgs {
    std::string panel;
    std::string airports;
    std::string fixed_effects = "on";
    std::string robust = "on";
    std::string fit;
    std::string out_dir;
};

struct SimulateArgs {
    std::string config;
    std::string panel;
    std::string airports;
    std::string fit;
    std::string fixed_effects;
    std::string robust;
    std::string mode;
    std::string out_dir;
    std::optional<double> fx;
};

struct ReportArgs {
    std::string impacts;
    std::string panel;
    std::string airports;
    std::string config;
    std::string out_dir;
};

int run_synth(const SynthArgs& a)
{
    auto params = market::DgpParams::defaults();
    params.seed = a.seed;
    params.noise_sd = a.noise_sd;
    if (a.noise_sd < 0.0) {
        throw ValidationError("--noise-sd must be >= 0");
    }
    const auto panel = market::generate_synthetic_panel(params, a.routes, a.periods);

    scenario::OutputBundle bundle;
    std::ostringstream panel_csv;
    market::write_panel(panel_csv, panel);
    bundle["panel.csv"] = panel_csv.str();
    std::ostringstream airports_csv;
    market::write_airports(airports_csv, panel.airports);
    bundle["airports.csv"] = airports_csv.str();

    nlohmann::ordered_json dgp;
    for (std::size_t i = 0; i < kRegressorCount; ++i) {
        dgp["coefficients"][std::string(kRegressorNames[i])] = params.coefficients[i];
    }
    dgp["noise_sd"] = params.noise_sd;
    dgp["route_effect_sd"] = params.route_effect_sd;
    dgp["seed"] = params.seed;
    dgp["n_routes"] = a.routes;
    dgp["n_periods"] = a.periods;
    bundle["dgp.json"] = dgp.dump(2) + "\n";
    scenario::write_bundle(a.out_dir, bundle);
    std::cout << "wrote " << panel.observations.size() << " observations to " << a.out_dir << "\n";
    return 0;
}

int run_emissions(const EmissionsArgs& a)
{
    const auto airports = market::load_airports(a.airports);
    const auto tables = emissions::load_fuel_tables(a.fuel_tables);
    const auto factors = emissions::load_emission_factors(a.emission_factors);
    auto from = airports.find(a.from);
    auto to = airports.find(a.to);
    if (from == airports.end() || to == airports.end()) {
        throw ValidationError("unknown airport code " + (from == airports.end() ? a.from : a.to));
    }
    auto profile = tables.find(a.aircraft_class);
    if (profile == tables.end()) {
        throw ValidationError("aircraft class '" + a.aircraft_class + "' not in fuel tables");
    }
    const auto e = emissions::route_emission({from->second.lat_deg, from->second.lon_deg},
                                             {to->second.lat_deg, to->second.lon_deg}, profile->second, a.seats,
                                             a.load_factor, factors);
    nlohmann::ordered_json out;
    out["origin"] = a.from;
    out["dest"] = a.to;
    out["aircraft_class"] = a.aircraft_class;
    out["seats"] = a.seats;
    out["load_factor"] = a.load_factor;
    out["gcd_km"] = e.gcd_km;
    out["corrected_km"] = e.corrected_km;
    out["fuel_kg"] = e.fuel_kg;
    out["co2_per_pax_t"] = e.co2_per_pax_t;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_estimate(const EstimateArgs& a)
{
    const auto airports = market::load_airports(a.airports);
    const auto panel = market::load_panel(a.panel, airports);
    const econometrics::ModelSpec spec{on_off(a.fixed_effects), on_off(a.robust)};
    const auto fit = econometrics::estimate(panel, spec);
    const std::string json = econometrics::fit_to_json(fit);
    if (!a.fit.empty()) {
        const fs::path target(a.fit);
        scenario::write_bundle(target.parent_path().empty() ? fs::path(".") : target.parent_path(),
                               {{target.filename().string(), json}});
    } else if (!a.out_dir.empty()) {
        scenario::write_bundle(a.out_dir, {{"fit.json", json}});
    } else {
        std::cout << json;
    }
    return 0;
}

int run_simulate(const SimulateArgs& a)
{
    auto config = scenario::load_config(a.config);
    if (!a.panel.empty()) {
        config.panel = a.panel;
    }
    if (!a.airports.empty()) {
        config.airports = a.airports;
    }
    if (!a.fit.empty()) {
        config.fit = a.fit;
    }
    if (!a.fixed_effects.empty()) {
        config.fixed_effects = on_off(a.fixed_effects);
    }
    if (!a.robust.empty()) {
        config.robust_se = on_off(a.robust);
    }
    if (!a.mode.empty()) {
        config.mode = tax::PassThroughMode::parse(a.mode);
    }
    if (a.fx) {
        config.fx_brl_per_eur = *a.fx;
    }
    const auto result = scenario::run_pipeline(config);
    scenario::write_bundle(a.out_dir, result.outputs);
    for (const auto& s : result.scenarios) {
        double q0 = 0.0;
        double loss = 0.0;
        for (const auto& r : s.impacts) {
            q0 += r.q_before;
            loss += r.loss_pax;
        }
        std::cout << s.scenario.label << ": loss " << format_double(loss) << " pax ("
                  << format_double(q0 > 0.0 ? 100.0 * loss / q0 : 0.0) << "%), skipped " << s.skipped.size()
                  << "\n";
    }
    return 0;
}

int run_report(const ReportArgs& a)
{
    scenario::RunConfig config;
    if (!a.config.empty()) {
        config = scenario::load_config(a.config);
    }
    const auto airports = market::load_airports(a.airports.empty() ? config.airports : fs::path(a.airports));
    const auto panel = market::load_panel(a.panel.empty() ? config.panel : fs::path(a.panel), airports);
    std::ifstream in(a.impacts);
    if (!in) {
        throw ValidationError("cannot open " + a.impacts);
    }
    const auto impacts = scenario::read_impacts(in, a.impacts);

    std::string stem = fs::path(a.impacts).stem().string();
    if (stem.starts_with("impacts_")) {
        stem = stem.substr(8);
    }
    scenario::OutputBundle bundle;
    for (auto dim : config.segmentation) {
        std::ostringstream seg;
        scenario::write_segments(seg, scenario::segment_report(impacts, panel, dim, config));
        bundle["segments_" + stem + "_" + std::string(scenario::to_string(dim)) + ".csv"] = seg.str();
    }
    scenario::write_bundle(a.out_dir, bundle);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Carbon-tax scenarios for domestic air travel demand"};
    app.require_subcommand(1);
    const auto on_off_check = CLI::IsMember({"on", "off"});

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic panel from the demand equation");
    synth_cmd->add_option("--seed", synth.seed, "RNG seed");
    synth_cmd->add_option("--routes", synth.routes, "Number of routes")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--periods", synth.periods, "Number of months from 2003-01")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--noise-sd", synth.noise_sd, "Log-demand noise standard deviation");
    synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

    EmissionsArgs em;
    auto* em_cmd = app.add_subcommand("emissions", "CO2 per passenger for an airport pair");
    em_cmd->add_option("--from", em.from, "Origin airport code")->required();
    em_cmd->add_option("--to", em.to, "Destination airport code")->required();
    em_cmd->add_option("--class", em.aircraft_class, "Aircraft class in the fuel tables");
    em_cmd->add_option("--airports", em.airports, "airports.csv")->required();
    em_cmd->add_option("--fuel-tables", em.fuel_tables, "fuel_tables.json")->required();
    em_cmd->add_option("--emission-factors", em.emission_factors, "emission_factors.json")->required();
    em_cmd->add_option("--seats", em.seats, "Seats per flight");
    em_cmd->add_option("--load-factor", em.load_factor, "Load factor in (0,1]");

    EstimateArgs est;
    auto* est_cmd = app.add_subcommand("estimate", "Fit the demand equation to a panel");
    est_cmd->add_option("--panel", est.panel, "panel.csv")->required();
    est_cmd->add_option("--airports", est.airports, "airports.csv")->required();
    est_cmd->add_option("--fixed-effects", est.fixed_effects, "Route fixed effects")->check(on_off_check);
    est_cmd->add_option("--robust", est.robust, "HC1 standard errors")->check(on_off_check);
    est_cmd->add_option("--fit", est.fit, "Output fit.json path");
    est_cmd->add_option("--out-dir", est.out_dir, "Output directory for fit.json");

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run every tax scenario and write impacts and segments");
    sim_cmd->add_option("--config", sim.config, "config.json")->required();
    sim_cmd->add_option("--panel", sim.panel, "Override panel path");
    sim_cmd->add_option("--airports", sim.airports, "Override airports path");
    sim_cmd->add_option("--fit", sim.fit, "Use this fit.json instead of estimating");
    sim_cmd->add_option("--fixed-effects", sim.fixed_effects, "Route fixed effects")->check(on_off_check);
    sim_cmd->add_option("--robust", sim.robust, "HC1 standard errors")->check(on_off_check);
    sim_cmd->add_option("--mode", sim.mode, "Pass-through: lerner|full|fixed:<rho>");
    sim_cmd->add_option("--fx", sim.fx, "Override BRL per EUR");
    sim_cmd->add_option("--out-dir", sim.out_dir, "Output directory")->required();

    ReportArgs rep;
    auto* rep_cmd = app.add_subcommand("report", "Segment tables from an impacts file");
    rep_cmd->add_option("--impacts", rep.impacts, "impacts_<rate>.csv")->required();
    rep_cmd->add_option("--panel", rep.panel, "panel.csv");
    rep_cmd->add_option("--airports", rep.airports, "airports.csv");
    rep_cmd->add_option("--config", rep.config, "config.json (segmentation and band edges)");
    rep_cmd->add_option("--out-dir", rep.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*synth_cmd) {
            return run_synth(synth);
        }
        if (*em_cmd) {
            return run_emissions(em);
        }
        if (*est_cmd) {
            return run_estimate(est);
        }
        if (*sim_cmd) {
            return run_simulate(sim);
        }
        if (*rep_cmd) {
            return run_report(rep);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
