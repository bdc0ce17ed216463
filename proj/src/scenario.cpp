#include "airtax/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unistd.h>

#include <json.hpp>
#include <openssl/evp.h>

namespace airtax::scenario {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kImpactsHeader =
    "route_id,period,co2_per_pax_t,elasticity,tax_per_ticket_brl,passthrough_rate,fare_before,"
    "fare_after,q_before,q_after,loss_pax,loss_fraction";

struct ObsKey {
    std::string_view route_id;
    int period;
    friend auto operator<=>(const ObsKey&, const ObsKey&) = default;
};

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    std::filesystem::path path(p);
    if (path.empty() || path.is_absolute() || base.empty()) {
        return path;
    }
    return base / path;
}

}  // namespace

std::string_view to_string(SegmentDimension d)
{
    switch (d) {
    case SegmentDimension::lf_band:
        return "lf_band";
    case SegmentDimension::year:
        return "year";
    case SegmentDimension::region:
        return "region";
    }
    return "?";
}

SegmentDimension parse_dimension(std::string_view text)
{
    for (auto d : {SegmentDimension::lf_band, SegmentDimension::year, SegmentDimension::region}) {
        if (to_string(d) == text) {
            return d;
        }
    }
    throw ValidationError("unknown segmentation key '" + std::string(text) + "' (lf_band|year|region)");
}

void RunConfig::validate() const
{
    if (tax_levels.empty()) {
        throw ValidationError("config: tax_levels is empty");
    }
    for (std::size_t i = 0; i < tax_levels.size(); ++i) {
        if (!(tax_levels[i] >= 0.0) || !std::isfinite(tax_levels[i])) {
            throw ValidationError("config: tax levels must be finite and >= 0");
        }
        if (i > 0 && !(tax_levels[i] > tax_levels[i - 1])) {
            throw ValidationError("config: tax levels must be sorted ascending without repeats");
        }
    }
    if (!fx_brl_per_eur) {
        throw ValidationError("config: fx_brl_per_eur is required");
    }
    if (!(*fx_brl_per_eur > 0.0) || !std::isfinite(*fx_brl_per_eur)) {
        throw ValidationError("config: fx_brl_per_eur must be positive");
    }
    if (lf_band_edges.size() < 2) {
        throw ValidationError("config: lf_band_edges needs at least 2 edges");
    }
    for (std::size_t i = 1; i < lf_band_edges.size(); ++i) {
        if (!(lf_band_edges[i] > lf_band_edges[i - 1])) {
            throw ValidationError("config: lf_band_edges must be strictly increasing");
        }
    }
    if (lf_band_edges.front() != 0.0 || lf_band_edges.back() != 1.0) {
        throw ValidationError("config: lf_band_edges must start at 0 and end at 1");
    }
    std::set<SegmentDimension> seen(segmentation.begin(), segmentation.end());
    if (seen.size() != segmentation.size()) {
        throw ValidationError("config: repeated segmentation key");
    }
    if (mode.kind == tax::PassThroughKind::fixed && !(mode.fixed_rate >= 0.0)) {
        throw ValidationError("config: fixed pass-through rate must be >= 0");
    }
}

RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir)
{
    static const std::set<std::string, std::less<>> known = {
        "tax_levels", "fx_brl_per_eur", "passthrough_mode", "fixed_effects",
        "robust_se", "airports", "panel", "fuel_tables",
        "emission_factors", "fit", "segmentation", "lf_band_edges"};
    RunConfig c;
    try {
        auto doc = Json::parse(json_text);
        if (!doc.is_object()) {
            throw ValidationError("config: top level must be an object");
        }
        for (const auto& [key, _] : doc.items()) {
            if (!known.contains(key)) {
                throw ValidationError("config: unknown key '" + key + "'");
            }
        }
        if (doc.contains("tax_levels")) {
            c.tax_levels = doc["tax_levels"].get<std::vector<double>>();
        }
        if (doc.contains("fx_brl_per_eur")) {
            c.fx_brl_per_eur = doc["fx_brl_per_eur"].get<double>();
        }
        if (doc.contains("passthrough_mode")) {
            c.mode = tax::PassThroughMode::parse(doc["passthrough_mode"].get<std::string>());
        }
        if (doc.contains("fixed_effects")) {
            c.fixed_effects = doc["fixed_effects"].get<bool>();
        }
        if (doc.contains("robust_se")) {
            c.robust_se = doc["robust_se"].get<bool>();
        }
        auto path_of = [&](const char* key) {
            return doc.contains(key) ? resolve(base_dir, doc[key].get<std::string>()) : std::filesystem::path{};
        };
        c.airports = path_of("airports");
        c.panel = path_of("panel");
        c.fuel_tables = path_of("fuel_tables");
        c.emission_factors = path_of("emission_factors");
        c.fit = path_of("fit");
        if (doc.contains("segmentation")) {
            c.segmentation.clear();
            for (const auto& s : doc["segmentation"]) {
                c.segmentation.push_back(parse_dimension(s.get<std::string>()));
            }
        }
        if (doc.contains("lf_band_edges")) {
            c.lf_band_edges = doc["lf_band_edges"].get<std::vector<double>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    return parse_config(read_file(path), path.parent_path());
}

std::string config_to_json(const RunConfig& c)
{
    Json doc;
    doc["tax_levels"] = c.tax_levels;
    if (c.fx_brl_per_eur) {
        doc["fx_brl_per_eur"] = *c.fx_brl_per_eur;
    }
    doc["passthrough_mode"] = c.mode.to_string();
    doc["fixed_effects"] = c.fixed_effects;
    doc["robust_se"] = c.robust_se;
    doc["airports"] = c.airports.string();
    doc["panel"] = c.panel.string();
    doc["fuel_tables"] = c.fuel_tables.string();
    doc["emission_factors"] = c.emission_factors.string();
    if (!c.fit.empty()) {
        doc["fit"] = c.fit.string();
    }
    Json segs = Json::array();
    for (auto d : c.segmentation) {
        segs.push_back(std::string(to_string(d)));
    }
    doc["segmentation"] = segs;
    doc["lf_band_edges"] = c.lf_band_edges;
    return doc.dump(2) + "\n";
}

std::vector<double> observation_emissions(const market::Panel& panel, const emissions::FuelTables& tables,
                                          const emissions::EmissionFactors& factors)
{
    std::vector<double> out;
    out.reserve(panel.observations.size());
    for (const auto& o : panel.observations) {
        const std::string where = "route " + o.route_id + " " + o.period.to_string() + ": ";
        auto profile = tables.find(o.aircraft_class);
        if (profile == tables.end()) {
            throw ValidationError(where + "aircraft class '" + o.aircraft_class + "' not in fuel tables");
        }
        const auto& a = panel.airports.at(o.origin);
        const auto& b = panel.airports.at(o.dest);
        try {
            out.push_back(emissions::route_emission({a.lat_deg, a.lon_deg}, {b.lat_deg, b.lon_deg}, profile->second,
                                                    o.seats, o.load_factor, factors)
                              .co2_per_pax_t);
        } catch (const NumericalError& e) {
            throw NumericalError(where + e.what());
        }
    }
    return out;
}

ScenarioOutcome simulate_scenario(const market::Panel& panel, const std::vector<double>& co2_per_pax,
                                  const tax::TaxScenario& scenario, const econometrics::FitResult& fit,
                                  const tax::PassThroughMode& mode)
{
    if (co2_per_pax.size() != panel.observations.size()) {
        throw std::invalid_argument("one CO2 value per observation required");
    }
    scenario.validate();
    std::vector<std::size_t> order(panel.observations.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        const auto& a = panel.observations[l];
        const auto& b = panel.observations[r];
        return ObsKey{a.route_id, a.period.ordinal()} < ObsKey{b.route_id, b.period.ordinal()};
    });

    ScenarioOutcome out;
    out.scenario = scenario;
    out.impacts.reserve(order.size());
    for (auto i : order) {
        const auto& o = panel.observations[i];
        try {
            out.impacts.push_back(tax::route_impact(o, co2_per_pax[i], scenario, fit, mode));
        } catch (const tax::PassThroughUndefined& e) {
            out.skipped.push_back({o.route_id, o.period, e.what()});
        }
    }
    return out;
}

std::string lf_band_label(double load_factor, const std::vector<double>& edges)
{
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (load_factor > edges[i - 1] && load_factor <= edges[i]) {
            return "(" + format_double(edges[i - 1]) + "," + format_double(edges[i]) + "]";
        }
    }
    throw ValidationError("load factor " + format_double(load_factor) + " outside the configured bands");
}

std::vector<SegmentReport> segment_report(const std::vector<tax::RouteImpact>& impacts,
                                          const market::Panel& panel, SegmentDimension dimension,
                                          const RunConfig& config)
{
    std::map<ObsKey, const market::PanelObservation*> index;
    for (const auto& o : panel.observations) {
        index.emplace(ObsKey{o.route_id, o.period.ordinal()}, &o);
    }
    std::map<std::string, SegmentReport> buckets;
    for (const auto& r : impacts) {
        auto it = index.find(ObsKey{r.route_id, r.period.ordinal()});
        if (it == index.end()) {
            throw ValidationError("impact row " + r.route_id + " " + r.period.to_string() +
                                  " has no matching panel observation");
        }
        const auto& o = *it->second;
        std::string label;
        switch (dimension) {
        case SegmentDimension::lf_band:
            label = lf_band_label(o.load_factor, config.lf_band_edges);
            break;
        case SegmentDimension::year:
            label = std::to_string(o.period.year);
            break;
        case SegmentDimension::region:
            label = std::string(market::to_string(panel.airports.at(o.dest).region));
            break;
        }
        auto& b = buckets[label];
        b.dimension = dimension;
        b.bucket = label;
        b.rows += 1;
        b.q_before += r.q_before;
        b.q_after += r.q_after;
        b.loss_pax += r.loss_pax;
    }
    std::vector<SegmentReport> rows;
    for (auto& [label, b] : buckets) {
        b.loss_fraction = b.q_before > 0.0 ? b.loss_pax / b.q_before : 0.0;
        rows.push_back(b);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const SegmentReport& a, const SegmentReport& b) {
        if (a.loss_fraction != b.loss_fraction) {
            return a.loss_fraction > b.loss_fraction;
        }
        return a.bucket < b.bucket;
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].rank = static_cast<int>(i + 1);
    }
    return rows;
}

void write_impacts(std::ostream& out, const std::vector<tax::RouteImpact>& impacts)
{
    out << kImpactsHeader << '\n';
    for (const auto& r : impacts) {
        out << r.route_id << ',' << r.period.to_string() << ',' << format_double(r.co2_per_pax_t) << ','
            << format_double(r.elasticity) << ',' << format_double(r.tax_per_ticket_brl) << ','
            << format_double(r.passthrough_rate) << ',' << format_double(r.fare_before) << ','
            << format_double(r.fare_after) << ',' << format_double(r.q_before) << ','
            << format_double(r.q_after) << ',' << format_double(r.loss_pax) << ','
            << format_double(r.loss_fraction) << '\n';
    }
}

std::vector<tax::RouteImpact> read_impacts(std::istream& in, std::string_view source)
{
    std::vector<tax::RouteImpact> out;
    std::string line;
    std::size_t line_no = 1;
    auto fail = [&](const std::string& what) {
        throw ValidationError(std::string(source) + ":" + std::to_string(line_no) + ": " + what);
    };
    if (!std::getline(in, line)) {
        fail("missing header");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kImpactsHeader) {
        fail("header must be '" + std::string(kImpactsHeader) + "'");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 12) {
            fail("expected 12 fields, found " + std::to_string(f.size()));
        }
        tax::RouteImpact r;
        try {
            r.route_id = std::string(f[0]);
            r.period = YearMonth::parse(f[1]);
            r.co2_per_pax_t = parse_double(f[2]);
            r.elasticity = parse_double(f[3]);
            r.tax_per_ticket_brl = parse_double(f[4]);
            r.passthrough_rate = parse_double(f[5]);
            r.fare_before = parse_double(f[6]);
            r.fare_after = parse_double(f[7]);
            r.q_before = parse_double(f[8]);
            r.q_after = parse_double(f[9]);
            r.loss_pax = parse_double(f[10]);
            r.loss_fraction = parse_double(f[11]);
        } catch (const ValidationError& e) {
            fail(e.what());
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_segments(std::ostream& out, const std::vector<SegmentReport>& rows)
{
    out << "dimension,bucket,rows,q_before,q_after,loss_pax,loss_fraction,rank\n";
    for (const auto& s : rows) {
        out << to_string(s.dimension) << ',' << s.bucket << ',' << s.rows << ',' << format_double(s.q_before) << ','
            << format_double(s.q_after) << ',' << format_double(s.loss_pax) << ','
            << format_double(s.loss_fraction) << ',' << s.rank << '\n';
    }
}

void write_bundle(const std::filesystem::path& out_dir, const OutputBundle& bundle)
{
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path staging = out_dir / (".staging-" + std::to_string(::getpid()));
    fs::remove_all(staging);
    fs::create_directories(staging);
    try {
        for (const auto& [name, content] : bundle) {
            std::ofstream out(staging / name, std::ios::binary);
            out << content;
            if (!out) {
                throw ValidationError("failed writing " + (out_dir / name).string());
            }
        }
        for (const auto& [name, _] : bundle) {
            fs::rename(staging / name, out_dir / name);
        }
    } catch (...) {
        fs::remove_all(staging);
        throw;
    }
    fs::remove_all(staging);
}

std::string rate_label(double tax_eur_per_tonne) { return format_double(tax_eur_per_tonne); }

std::string sha256_file(const std::filesystem::path& path)
{
    const std::string data = read_file(path);
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed for " + path.string());
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex += kHex[digest[i] >> 4];
        hex += kHex[digest[i] & 0xF];
    }
    return hex;
}

PipelineResult run_pipeline(const RunConfig& config)
{
    config.validate();
    for (const auto& [name, path] : {std::pair{"airports", &config.airports}, std::pair{"panel", &config.panel},
                                     std::pair{"fuel_tables", &config.fuel_tables},
                                     std::pair{"emission_factors", &config.emission_factors}}) {
        if (path->empty()) {
            throw ValidationError(std::string("config: path '") + name + "' is required");
        }
    }
    const auto airports = market::load_airports(config.airports);
    const auto panel = market::load_panel(config.panel, airports);
    const auto tables = emissions::load_fuel_tables(config.fuel_tables);
    const auto factors = emissions::load_emission_factors(config.emission_factors);

    PipelineResult result;
    const bool fit_from_file = !config.fit.empty();
    if (fit_from_file) {
        result.fit = econometrics::fit_from_json(read_file(config.fit));
    } else {
        result.fit = econometrics::estimate(panel, config.model_spec());
        result.outputs["fit.json"] = econometrics::fit_to_json(result.fit);
    }

    const auto co2 = observation_emissions(panel, tables, factors);

    Json summary_rows = Json::array();
    std::ostringstream summary;
    summary << "tax_eur_per_tonne,rows,skipped,q_before,q_after,loss_pax,loss_fraction\n";
    for (double rate : config.tax_levels) {
        tax::TaxScenario scenario{rate, *config.fx_brl_per_eur, rate_label(rate) + " EUR/tCO2"};
        auto outcome = simulate_scenario(panel, co2, scenario, result.fit, config.mode);
        if (outcome.impacts.empty() && !outcome.skipped.empty()) {
            throw NumericalError("pass-through undefined on every route-period (|elasticity| <= hhi)");
        }
        const std::string label = rate_label(rate);
        std::ostringstream impacts;
        write_impacts(impacts, outcome.impacts);
        result.outputs["impacts_" + label + ".csv"] = impacts.str();
        for (auto dim : config.segmentation) {
            std::ostringstream seg;
            write_segments(seg, segment_report(outcome.impacts, panel, dim, config));
            result.outputs["segments_" + label + "_" + std::string(to_string(dim)) + ".csv"] = seg.str();
        }
        double q0 = 0.0;
        double q1 = 0.0;
        double loss = 0.0;
        for (const auto& r : outcome.impacts) {
            q0 += r.q_before;
            q1 += r.q_after;
            loss += r.loss_pax;
        }
        summary << label << ',' << outcome.impacts.size() << ',' << outcome.skipped.size() << ','
                << format_double(q0) << ',' << format_double(q1) << ',' << format_double(loss) << ','
                << format_double(q0 > 0.0 ? loss / q0 : 0.0) << '\n';
        result.scenarios.push_back(std::move(outcome));
    }
    result.outputs["summary.csv"] = summary.str();

    // The skipped set depends only on elasticity and hhi, never on the tax rate.
    Json skipped = Json::array();
    if (!result.scenarios.empty()) {
        for (const auto& s : result.scenarios.front().skipped) {
            skipped.push_back({{"route_id", s.route_id}, {"period", s.period.to_string()}, {"reason", s.reason}});
        }
    }

    Json manifest;
    manifest["config"] = Json::parse(config_to_json(config));
    Json inputs;
    inputs["airports"] = {{"path", config.airports.string()}, {"sha256", sha256_file(config.airports)}};
    inputs["panel"] = {{"path", config.panel.string()}, {"sha256", sha256_file(config.panel)}};
    inputs["fuel_tables"] = {{"path", config.fuel_tables.string()}, {"sha256", sha256_file(config.fuel_tables)}};
    inputs["emission_factors"] = {{"path", config.emission_factors.string()},
                                  {"sha256", sha256_file(config.emission_factors)}};
    if (fit_from_file) {
        inputs["fit"] = {{"path", config.fit.string()}, {"sha256", sha256_file(config.fit)}};
    }
    manifest["inputs"] = inputs;
    manifest["fit_source"] = fit_from_file ? "file" : "estimated";
    manifest["n_observations"] = panel.observations.size();
    manifest["skipped_count"] = skipped.size();
    manifest["skipped"] = skipped;
    Json files = Json::array();
    for (const auto& [name, _] : result.outputs) {
        files.push_back(name);
    }
    files.push_back("manifest.json");
    manifest["outputs"] = files;
    result.outputs["manifest.json"] = manifest.dump(2) + "\n";
    return result;
}

}  // namespace airtax::scenario
