#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "airtax/scenario.hpp"
#include "oracles.hpp"

using namespace airtax;
using namespace airtax::scenario;
namespace fs = std::filesystem;

namespace {

const fs::path kData{AIRTAX_DATA_DIR};

/// Writes a synthetic panel plus config.json into dir and returns the parsed config.
RunConfig make_fixture(const fs::path& dir, int routes, int periods, std::uint64_t seed,
                       const std::string& extra_config = "")
{
    auto params = market::DgpParams::defaults();
    params.seed = seed;
    const auto panel = market::generate_synthetic_panel(params, routes, periods);
    {
        std::ofstream a(dir / "airports.csv");
        market::write_airports(a, panel.airports);
        std::ofstream p(dir / "panel.csv");
        market::write_panel(p, panel);
    }
    std::string cfg = R"({
  "fx_brl_per_eur": 3.0,
  "airports": "airports.csv",
  "panel": "panel.csv",
  "fuel_tables": ")" + (kData / "fuel_tables.json").string() +
                      R"(",
  "emission_factors": ")" + (kData / "emission_factors.json").string() + "\"" + extra_config + "\n}\n";
    oracle::write_text(dir / "config.json", cfg);
    return load_config(dir / "config.json");
}

tax::RouteImpact impact(const std::string& id, YearMonth period, double q0, double q1)
{
    tax::RouteImpact r;
    r.route_id = id;
    r.period = period;
    r.q_before = q0;
    r.q_after = q1;
    r.loss_pax = q0 - q1;
    r.loss_fraction = r.loss_pax / q0;
    return r;
}

market::Panel tiny_panel()
{
    auto params = market::DgpParams::defaults();
    return market::generate_synthetic_panel(params, 3, 2);
}

double total(const std::vector<tax::RouteImpact>& impacts, double tax::RouteImpact::*field)
{
    double s = 0.0;
    for (const auto& r : impacts) {
        s += r.*field;
    }
    return s;
}

}  // namespace

TEST_CASE("config parsing")
{
    auto c = parse_config(R"({"fx_brl_per_eur": 2.9, "passthrough_mode": "fixed:0.5", "fixed_effects": false,
                              "segmentation": ["region"], "lf_band_edges": [0, 0.5, 1], "panel": "p.csv"})",
                          "/base");
    CHECK(*c.fx_brl_per_eur == 2.9);
    CHECK(c.mode.kind == tax::PassThroughKind::fixed);
    CHECK_FALSE(c.fixed_effects);
    CHECK(c.robust_se);
    CHECK(c.tax_levels == std::vector<double>{10.0, 15.0, 30.0});
    CHECK(c.segmentation == std::vector<SegmentDimension>{SegmentDimension::region});
    CHECK(c.panel == fs::path("/base/p.csv"));
    CHECK_NOTHROW(c.validate());

    CHECK_THROWS_WITH_AS(parse_config(R"({"fx_brl_per_eur": 3, "tax_level": [10]})"), doctest::Contains("tax_level"),
                         ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"segmentation": ["airline"]})"), ValidationError);
    CHECK_THROWS_AS(parse_config("[1,2]"), ValidationError);

    RunConfig missing_fx;
    CHECK_THROWS_WITH_AS(missing_fx.validate(), doctest::Contains("fx_brl_per_eur"), ValidationError);
    auto bad = parse_config(R"({"fx_brl_per_eur": 3, "tax_levels": [30, 10]})");
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = parse_config(R"({"fx_brl_per_eur": 3, "tax_levels": [-1]})");
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = parse_config(R"({"fx_brl_per_eur": 3, "lf_band_edges": [0, 0.9, 0.8, 1]})");
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = parse_config(R"({"fx_brl_per_eur": 3, "lf_band_edges": [0.1, 1]})");
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = parse_config(R"({"fx_brl_per_eur": 3, "segmentation": ["year", "year"]})");
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    // Echo parses back to the same configuration.
    auto echoed = parse_config(config_to_json(c));
    CHECK(echoed.mode == c.mode);
    CHECK(echoed.lf_band_edges == c.lf_band_edges);
    CHECK(echoed.panel == c.panel);
}

TEST_CASE("lf band labels are left-open, right-closed")
{
    const std::vector<double> edges{0.0, 0.7, 0.8, 0.9, 1.0};
    CHECK(lf_band_label(0.95, edges) == "(0.9,1]");
    CHECK(lf_band_label(0.9, edges) == "(0.8,0.9]");
    CHECK(lf_band_label(1.0, edges) == "(0.9,1]");
    CHECK(lf_band_label(0.01, edges) == "(0,0.7]");
    CHECK_THROWS_AS(lf_band_label(0.0, edges), ValidationError);
}

TEST_CASE("segment_report singleton, ties and joins")
{
    auto panel = tiny_panel();
    RunConfig config;
    const auto& o = panel.observations.front();
    std::vector<tax::RouteImpact> one{impact(o.route_id, o.period, 1000.0, 970.0)};
    for (auto dim : {SegmentDimension::lf_band, SegmentDimension::year, SegmentDimension::region}) {
        auto rows = segment_report(one, panel, dim, config);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].q_before == 1000.0);
        CHECK(rows[0].q_after == 970.0);
        CHECK(rows[0].loss_pax == 30.0);
        CHECK(rows[0].loss_fraction == doctest::Approx(0.03));
        CHECK(rows[0].rank == 1);
    }

    // Two buckets with equal loss fractions: label ascending breaks the tie.
    auto& a = panel.observations[0];
    auto& b = panel.observations[2];
    a.load_factor = 0.95;
    b.load_factor = 0.75;
    std::vector<tax::RouteImpact> tie{impact(a.route_id, a.period, 1000.0, 950.0),
                                      impact(b.route_id, b.period, 2000.0, 1900.0)};
    auto rows = segment_report(tie, panel, SegmentDimension::lf_band, config);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].bucket == "(0.7,0.8]");
    CHECK(rows[1].bucket == "(0.9,1]");
    CHECK(rows[0].rank == 1);
    CHECK(rows[1].rank == 2);

    std::vector<tax::RouteImpact> orphan{impact("NOPE", {2005, 1}, 10.0, 9.0)};
    CHECK_THROWS_AS(segment_report(orphan, panel, SegmentDimension::year, config), ValidationError);
}

TEST_CASE("impacts CSV round trip")
{
    std::vector<tax::RouteImpact> rows{impact("R1", {2005, 1}, 1234.5, 1200.25), impact("R2", {2013, 12}, 7.0, 6.5)};
    rows[0].elasticity = -1.37;
    rows[0].passthrough_rate = 4.0 / 3.0;
    std::stringstream ss;
    write_impacts(ss, rows);
    const auto back = read_impacts(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].passthrough_rate == rows[0].passthrough_rate);
    CHECK(back[1].period.to_string() == "2013-12");
    std::stringstream again;
    write_impacts(again, back);
    std::stringstream first;
    write_impacts(first, rows);
    CHECK(again.str() == first.str());

    std::istringstream bad("route_id\n");
    CHECK_THROWS_AS(read_impacts(bad), ValidationError);
}

TEST_CASE("pipeline: null tax scenario produces zero losses")
{
    oracle::TempDir dir("null");
    auto config = make_fixture(dir.path(), 8, 72, 1, R"(, "tax_levels": [0])");
    const auto result = run_pipeline(config);
    REQUIRE(result.scenarios.size() == 1);
    for (const auto& r : result.scenarios[0].impacts) {
        CHECK(r.loss_fraction == 0.0);
        CHECK(r.loss_pax == 0.0);
    }
    const auto& seg = result.outputs.at("segments_0_region.csv");
    std::istringstream lines(seg);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        auto f = split_csv_line(line);
        CHECK(parse_double(f[5]) == 0.0);
        CHECK(parse_double(f[6]) == 0.0);
    }
}

TEST_CASE("pipeline: totals strictly increase across 10, 15, 30 EUR/t and partitions sum to totals")
{
    oracle::TempDir dir("levels");
    auto config = make_fixture(dir.path(), 30, 72, 2);
    const auto result = run_pipeline(config);
    REQUIRE(result.scenarios.size() == 3);
    double prev = 0.0;
    for (const auto& s : result.scenarios) {
        const double loss = total(s.impacts, &tax::RouteImpact::loss_pax);
        CHECK(loss > prev);
        prev = loss;
        const double q0 = total(s.impacts, &tax::RouteImpact::q_before);
        for (auto dim : config.segmentation) {
            const auto rows = segment_report(s.impacts, market::load_panel(config.panel, market::load_airports(config.airports)),
                                             dim, config);
            double sq0 = 0.0;
            double sloss = 0.0;
            std::size_t n = 0;
            for (const auto& r : rows) {
                sq0 += r.q_before;
                sloss += r.loss_pax;
                n += r.rows;
            }
            CHECK(n == s.impacts.size());
            CHECK(std::abs(sq0 - q0) <= 1e-9 * q0);
            CHECK(std::abs(sloss - loss) <= 1e-9 * loss);
        }
    }
    CHECK(result.outputs.contains("impacts_10.csv"));
    CHECK(result.outputs.contains("impacts_15.csv"));
    CHECK(result.outputs.contains("impacts_30.csv"));
    CHECK(result.outputs.contains("segments_30_lf_band.csv"));
    CHECK(result.outputs.contains("segments_30_year.csv"));
    CHECK(result.outputs.contains("summary.csv"));
    CHECK(result.outputs.contains("fit.json"));
    CHECK(result.outputs.contains("manifest.json"));
}

TEST_CASE("pipeline: manifest lists every skipped route-period exactly once")
{
    oracle::TempDir dir("skips");
    auto config = make_fixture(dir.path(), 25, 72, 3);
    const auto result = run_pipeline(config);
    const auto manifest = nlohmann::json::parse(result.outputs.at("manifest.json"));
    const auto& skipped = manifest.at("skipped");
    CHECK(manifest.at("skipped_count").get<std::size_t>() == skipped.size());
    CHECK(skipped.size() > 0);  // the default DGP has routes with |elasticity| <= hhi
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& s : skipped) {
        CHECK(seen.emplace(s.at("route_id").get<std::string>(), s.at("period").get<std::string>()).second);
    }
    for (const auto& s : result.scenarios) {
        CHECK(s.skipped.size() == skipped.size());
        CHECK(s.impacts.size() + s.skipped.size() == manifest.at("n_observations").get<std::size_t>());
    }
    CHECK(manifest.at("inputs").at("panel").at("sha256").get<std::string>().size() == 64);
    CHECK(manifest.at("fit_source") == "estimated");
}

TEST_CASE("pipeline: full pass-through skips nothing")
{
    oracle::TempDir dir("full");
    auto config = make_fixture(dir.path(), 10, 72, 4, R"(, "passthrough_mode": "full")");
    const auto result = run_pipeline(config);
    for (const auto& s : result.scenarios) {
        CHECK(s.skipped.empty());
    }
}

TEST_CASE("pipeline: identical runs are byte-identical")
{
    oracle::TempDir dir("determinism");
    auto config = make_fixture(dir.path(), 20, 72, 5);
    const auto a = run_pipeline(config);
    const auto b = run_pipeline(config);
    CHECK(a.outputs == b.outputs);
    write_bundle(dir / "out_a", a.outputs);
    write_bundle(dir / "out_b", b.outputs);
    for (const auto& [name, _] : a.outputs) {
        CHECK(oracle::read_text(dir / "out_a" / name) == oracle::read_text(dir / "out_b" / name));
    }
    for (const auto& entry : fs::directory_iterator(dir / "out_a")) {
        CHECK(a.outputs.contains(entry.path().filename().string()));
    }
}

TEST_CASE("pipeline: tourism-heavy Nordeste destinations lose the most demand")
{
    oracle::TempDir dir("nordeste");
    auto config = make_fixture(dir.path(), 60, 72, 6, R"(, "passthrough_mode": "full")");

    // Fit on the generated panel, then reseed the passenger mix by destination region.
    const auto fit = run_pipeline(config).fit;
    oracle::write_text(dir / "fit.json", econometrics::fit_to_json(fit));
    auto airports = market::load_airports(config.airports);
    auto panel = market::load_panel(config.panel, airports);
    bool any_nordeste = false;
    for (auto& o : panel.observations) {
        if (airports.at(o.dest).region == market::Region::Nordeste) {
            o.share_business = 0.05;
            o.share_other_mode = 0.7;
            any_nordeste = true;
        } else {
            o.share_business = 0.7;
            o.share_other_mode = 0.05;
        }
    }
    REQUIRE(any_nordeste);
    {
        std::ofstream p(dir / "panel.csv");
        market::write_panel(p, panel);
    }
    config.fit = dir / "fit.json";
    const auto result = run_pipeline(config);
    for (const auto& s : result.scenarios) {
        const auto rows = segment_report(s.impacts, panel, SegmentDimension::region, config);
        REQUIRE(!rows.empty());
        CHECK(rows.front().bucket == "Nordeste");
    }
    CHECK(nlohmann::json::parse(result.outputs.at("manifest.json")).at("fit_source") == "file");
}

TEST_CASE("pipeline: failures leave no outputs behind")
{
    oracle::TempDir dir("failure");
    auto config = make_fixture(dir.path(), 4, 72, 7);
    oracle::write_text(dir / "panel.csv", std::string(market::kPanelHeader) +
                                               "\nR1,GRU,REC,2005-03,0,350,400,1500,0.3,0.2,0,1,0.5,0.8,180,narrow\n");
    CHECK_THROWS_AS(run_pipeline(config), ValidationError);
    CHECK_FALSE(fs::exists(dir / "out"));

    // Every route inelastic relative to its concentration: pass-through undefined everywhere.
    auto good = make_fixture(dir.path(), 4, 72, 7);
    econometrics::FitResult inelastic;
    inelastic.names = {"log_fare"};
    inelastic.coefficients = Eigen::VectorXd::Constant(1, -0.1);
    inelastic.std_errors = Eigen::VectorXd::Constant(1, 0.01);
    oracle::write_text(dir / "fit.json", econometrics::fit_to_json(inelastic));
    good.fit = dir / "fit.json";
    CHECK_THROWS_AS(run_pipeline(good), NumericalError);
}

TEST_CASE("write_bundle replaces files and leaves no staging directory")
{
    oracle::TempDir dir("bundle");
    write_bundle(dir / "out", {{"a.txt", "one"}, {"b.txt", "two"}});
    write_bundle(dir / "out", {{"a.txt", "three"}});
    CHECK(oracle::read_text(dir / "out" / "a.txt") == "three");
    CHECK(oracle::read_text(dir / "out" / "b.txt") == "two");
    std::size_t entries = 0;
    for (const auto& e : fs::directory_iterator(dir / "out")) {
        CHECK(e.path().filename().string().rfind(".staging", 0) != 0);
        ++entries;
    }
    CHECK(entries == 2);
}

TEST_CASE("observation emissions reject unknown aircraft classes")
{
    auto panel = tiny_panel();
    panel.observations[0].aircraft_class = "turboprop";
    const auto tables = emissions::load_fuel_tables(kData / "fuel_tables.json");
    CHECK_THROWS_WITH_AS(observation_emissions(panel, tables, {}), doctest::Contains("turboprop"), ValidationError);
}
