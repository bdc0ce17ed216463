#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "airtax/econometrics.hpp"
#include "airtax/emissions.hpp"
#include "airtax/market_data.hpp"
#include "airtax/tax_scenario.hpp"

namespace airtax::scenario {

enum class SegmentDimension { lf_band, year, region };

std::string_view to_string(SegmentDimension d);
SegmentDimension parse_dimension(std::string_view text);

struct RunConfig {
    std::vector<double> tax_levels{10.0, 15.0, 30.0};
    std::optional<double> fx_brl_per_eur;  // required; no default rate
    tax::PassThroughMode mode;
    bool fixed_effects = true;
    bool robust_se = true;
    std::filesystem::path airports;
    std::filesystem::path panel;
    std::filesystem::path fuel_tables;
    std::filesystem::path emission_factors;
    std::filesystem::path fit;  // empty: estimate from the panel
    std::vector<SegmentDimension> segmentation{SegmentDimension::lf_band, SegmentDimension::year,
                                               SegmentDimension::region};
    std::vector<double> lf_band_edges{0.0, 0.7, 0.8, 0.9, 1.0};

    void validate() const;
    econometrics::ModelSpec model_spec() const { return {fixed_effects, robust_se}; }
};

/// Parses config.json. Unknown keys are rejected. Relative paths resolve against base_dir.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

struct SkippedRow {
    std::string route_id;
    YearMonth period;
    std::string reason;
};

struct ScenarioOutcome {
    tax::TaxScenario scenario;
    std::vector<tax::RouteImpact> impacts;  // ordered by route_id, then period
    std::vector<SkippedRow> skipped;
};

struct SegmentReport {
    SegmentDimension dimension = SegmentDimension::lf_band;
    std::string bucket;
    std::size_t rows = 0;
    double q_before = 0.0;
    double q_after = 0.0;
    double loss_pax = 0.0;
    double loss_fraction = 0.0;
    int rank = 0;  // 1 = largest loss_fraction
};

/// CO2 per passenger for every observation, in panel order.
std::vector<double> observation_emissions(const market::Panel& panel, const emissions::FuelTables& tables,
                                          const emissions::EmissionFactors& factors);

ScenarioOutcome simulate_scenario(const market::Panel& panel, const std::vector<double>& co2_per_pax,
                                  const tax::TaxScenario& scenario, const econometrics::FitResult& fit,
                                  const tax::PassThroughMode& mode);

/// Label of the (lo, hi] load-factor band holding lf.
std::string lf_band_label(double load_factor, const std::vector<double>& edges);

/// Buckets partition the impacts; ranked by loss_fraction descending, ties by label ascending.
std::vector<SegmentReport> segment_report(const std::vector<tax::RouteImpact>& impacts,
                                          const market::Panel& panel, SegmentDimension dimension,
                                          const RunConfig& config);

void write_impacts(std::ostream& out, const std::vector<tax::RouteImpact>& impacts);
std::vector<tax::RouteImpact> read_impacts(std::istream& in, std::string_view source = "impacts.csv");
void write_segments(std::ostream& out, const std::vector<SegmentReport>& rows);

/// File name -> contents, written together or not at all.
using OutputBundle = std::map<std::string, std::string>;

void write_bundle(const std::filesystem::path& out_dir, const OutputBundle& bundle);

std::string rate_label(double tax_eur_per_tonne);

struct PipelineResult {
    OutputBundle outputs;
    econometrics::FitResult fit;
    std::vector<ScenarioOutcome> scenarios;
};

/// Ingest, estimate (unless a fit file is given), compute emissions, simulate every tax
/// level and segment. Nothing touches disk; see write_bundle.
PipelineResult run_pipeline(const RunConfig& config);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace airtax::scenario
