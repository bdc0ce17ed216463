#include <doctest.h>

#include <sstream>

#include "airtax/market_data.hpp"
#include "oracles.hpp"

using namespace airtax;
using namespace airtax::market;

namespace {

const char* kTwoAirports = "code,lat_deg,lon_deg,region\nGRU,-23.4356,-46.4731,Sudeste\nREC,-8.1264,-34.9236,Nordeste\n";

AirportSet two_airports()
{
    std::istringstream in(kTwoAirports);
    return read_airports(in);
}

std::string panel_text(const std::string& rows)
{
    return std::string(kPanelHeader) + "\n" + rows;
}

const std::string kRow1 = "R1,GRU,REC,2005-03,1200,350,400,1500,0.3,0.2,0,1,0.5,0.8,180,narrow\n";
const std::string kRow2 = "R1,GRU,REC,2005-04,1300,340,401,1510,0.3,0.2,1,1,0.5,0.85,180,narrow\n";

Panel parse(const std::string& rows)
{
    std::istringstream in(panel_text(rows));
    return read_panel(in, two_airports());
}

std::string error_of(const std::string& rows)
{
    try {
        parse(rows);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("load_airports maps fields")
{
    auto airports = two_airports();
    REQUIRE(airports.size() == 2);
    const auto& gru = airports.at("GRU");
    CHECK(gru.lat_deg == -23.4356);
    CHECK(gru.lon_deg == -46.4731);
    CHECK(gru.region == Region::Sudeste);
    CHECK(airports.at("REC").region == Region::Nordeste);
}

TEST_CASE("load_airports rejects bad rows with line numbers")
{
    auto err = [](const std::string& body) -> std::string {
        std::istringstream in("code,lat_deg,lon_deg,region\n" + body);
        try {
            read_airports(in, "a.csv");
        } catch (const ValidationError& e) {
            return e.what();
        }
        return {};
    };
    CHECK(err("XXX,95.0,0.0,Sul\n").find("a.csv:2: latitude out of range") != std::string::npos);
    CHECK(err("XXX,0.0,-180,Sul\n").find("longitude") != std::string::npos);
    CHECK(err("REC,-8,-34,Nordeste\nREC,-8,-34,Nordeste\n").find("a.csv:3: duplicate code REC") !=
          std::string::npos);
    CHECK(err("REC,-8,-34,Atlantis\n").find("unknown region") != std::string::npos);
    CHECK(err("REC,-8,-34\n").find("expected 4 fields") != std::string::npos);
    CHECK(err("REC,abc,-34,Sul\n").find("a.csv:2:") != std::string::npos);
}

TEST_CASE("load_airports from file")
{
    auto airports = load_airports(std::filesystem::path(AIRTAX_DATA_DIR) / "airports.csv");
    CHECK(airports.size() >= 20);
    CHECK(airports.at("REC").region == Region::Nordeste);
    CHECK_THROWS_AS(load_airports("/nonexistent/airports.csv"), ValidationError);
}

TEST_CASE("load_panel happy path")
{
    auto panel = parse(kRow1 + kRow2);
    REQUIRE(panel.observations.size() == 2);
    const auto& o = panel.observations[1];
    CHECK(o.route_id == "R1");
    CHECK(o.period.to_string() == "2005-04");
    CHECK(o.pax == 1300);
    CHECK(o.codeshare);
    CHECK(o.lowcost_present);
    CHECK(o.seats == 180);
    CHECK(o.aircraft_class == "narrow");
}

TEST_CASE("load_panel rejects every invariant violation with a line number")
{
    CHECK(error_of("R1,GRU,REC,2005-03,0,350,400,1500,0.3,0.2,0,1,0.5,0.8,180,narrow\n").find(
              "panel.csv:2: non-positive demand") != std::string::npos);
    CHECK(error_of("R1,GRU,REC,2014-01,10,350,400,1500,0.3,0.2,0,1,0.5,0.8,180,narrow\n").find(
              "outside sample window") != std::string::npos);
    CHECK(error_of("R1,GRU,REC,2002-12,10,350,400,1500,0.3,0.2,0,1,0.5,0.8,180,narrow\n").find(
              "outside sample window") != std::string::npos);
    CHECK(error_of("R1,GRU,XYZ,2005-03,10,350,400,1500,0.3,0.2,0,1,0.5,0.8,180,narrow\n").find(
              "unknown airport code XYZ") != std::string::npos);
    CHECK(error_of(kRow1 + kRow1).find("panel.csv:3: duplicate (route_id, period)") != std::string::npos);
    CHECK(error_of("R1,GRU,REC,2005-03,10,0,400,1500,0.3,0.2,0,1,0.5,0.8,180,narrow\n").find("avg_fare") !=
          std::string::npos);
    CHECK(error_of("R1,GRU,REC,2005-03,10,350,-1,1500,0.3,0.2,0,1,0.5,0.8,180,narrow\n").find("pop_density") !=
          std::string::npos);
    CHECK(error_of("R1,GRU,REC,2005-03,10,350,400,0,0.3,0.2,0,1,0.5,0.8,180,narrow\n").find("income") !=
          std::string::npos);
    CHECK(error_of("R1,GRU,REC,2005-03,10,350,400,1500,1.3,0.2,0,1,0.5,0.8,180,narrow\n").find("share_business") !=
          std::string::npos);
    CHECK(error_of("R1,GRU,REC,2005-03,10,350,400,1500,0.3,-0.2,0,1,0.5,0.8,180,narrow\n").find(
              "share_other_mode") != std::string::npos);
    CHECK(error_of("R1,GRU,REC,2005-03,10,350,400,1500,0.3,0.2,0,1,0,0.8,180,narrow\n").find("hhi") !=
          std::string::npos);
    CHECK(error_of("R1,GRU,REC,2005-03,10,350,400,1500,0.3,0.2,0,1,0.5,1.2,180,narrow\n").find("load_factor") !=
          std::string::npos);
    CHECK(error_of("R1,GRU,REC,2005-03,10,350,400,1500,0.3,0.2,0,1,0.5,0.8,0,narrow\n").find("seats") !=
          std::string::npos);
    CHECK(error_of("R1,GRU,REC,2005-03,10,350,400,1500,0.3,0.2,2,1,0.5,0.8,180,narrow\n").find("0 or 1") !=
          std::string::npos);
    CHECK(error_of("R1,GRU,REC,2005-3,10,350,400,1500,0.3,0.2,0,1,0.5,0.8,180,narrow\n").find("YYYY-MM") !=
          std::string::npos);
    CHECK(error_of("R1,GRU,REC\n").find("expected 16 fields") != std::string::npos);

    std::istringstream bad_header("route_id,origin\n");
    CHECK_THROWS_AS(read_panel(bad_header, two_airports()), ValidationError);
}

TEST_CASE("sample window is configurable")
{
    Calendar cal;
    cal.sample = {{2014, 1}, {2014, 12}};
    std::istringstream in(panel_text("R1,GRU,REC,2014-01,10,350,400,1500,0.3,0.2,0,1,0.5,0.8,180,narrow\n"));
    CHECK(read_panel(in, two_airports(), cal).observations.size() == 1);
}

TEST_CASE("calendar dummy windows")
{
    Calendar cal;
    CHECK_FALSE(cal.is_apagao({2006, 9}));
    CHECK(cal.is_apagao({2006, 10}));
    CHECK(cal.is_apagao({2007, 1}));
    CHECK(cal.is_apagao({2007, 7}));
    CHECK_FALSE(cal.is_apagao({2007, 8}));
    CHECK_FALSE(cal.is_crisis({2008, 9}));
    CHECK(cal.is_crisis({2008, 10}));
    CHECK(cal.is_crisis({2008, 12}));
    CHECK_FALSE(cal.is_crisis({2009, 1}));
}

TEST_CASE("synthetic panel is deterministic and byte-identical after serialization")
{
    auto params = DgpParams::defaults();
    params.seed = 123;
    auto a = generate_synthetic_panel(params, 12, 30);
    auto b = generate_synthetic_panel(params, 12, 30);
    CHECK(a == b);
    std::ostringstream sa;
    std::ostringstream sb;
    write_panel(sa, a);
    write_panel(sb, b);
    CHECK(sa.str() == sb.str());

    params.seed = 124;
    CHECK_FALSE(generate_synthetic_panel(params, 12, 30) == a);
}

TEST_CASE("synthetic panel dimensions and calendar flags")
{
    auto panel = generate_synthetic_panel(DgpParams::defaults(), 200, 132);
    REQUIRE(panel.observations.size() == 26400);
    Calendar cal;
    std::size_t apagao_rows = 0;
    for (const auto& o : panel.observations) {
        const bool in_window = YearMonth{2006, 10} <= o.period && o.period <= YearMonth{2007, 7};
        CHECK(cal.is_apagao(o.period) == in_window);
        apagao_rows += in_window ? 1 : 0;
    }
    CHECK(apagao_rows == 200 * 10);
    CHECK(panel.observations.front().period.to_string() == "2003-01");
    CHECK(panel.observations.back().period.to_string() == "2013-12");
    CHECK_NOTHROW(validate_panel(panel));
}

TEST_CASE("synthetic regressors follow the documented ranges")
{
    auto panel = generate_synthetic_panel(DgpParams::defaults(), 50, 40);
    bool saw_high_lf = false;
    for (const auto& o : panel.observations) {
        CHECK(o.avg_fare_brl >= 150.0);
        CHECK(o.avg_fare_brl <= 800.0);
        CHECK(o.share_business <= 0.8);
        CHECK(o.share_other_mode <= 0.8);
        CHECK(o.hhi >= 0.2);
        CHECK(o.load_factor >= 0.5);
        CHECK(o.load_factor <= 0.98);
        CHECK(o.origin != o.dest);
        saw_high_lf = saw_high_lf || o.load_factor > 0.9;
    }
    CHECK(saw_high_lf);
}

TEST_CASE("generator preconditions")
{
    CHECK_THROWS_AS(generate_synthetic_panel(DgpParams::defaults(), 0, 10), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic_panel(DgpParams::defaults(), 10, 133), std::invalid_argument);
    auto p = DgpParams::defaults();
    p.noise_sd = -1.0;
    CHECK_THROWS_AS(generate_synthetic_panel(p, 1, 1), std::invalid_argument);
}

TEST_CASE("property: panel and airports survive a CSV round trip")
{
    for (std::uint64_t seed : {1u, 2u, 3u, 99u}) {
        auto params = DgpParams::defaults();
        params.seed = seed;
        auto panel = generate_synthetic_panel(params, 7, 25);

        oracle::TempDir dir("roundtrip");
        {
            std::ofstream a(dir / "airports.csv");
            write_airports(a, panel.airports);
            std::ofstream p(dir / "panel.csv");
            write_panel(p, panel);
        }
        auto airports = load_airports(dir / "airports.csv");
        auto reloaded = load_panel(dir / "panel.csv", airports);
        CHECK(reloaded == panel);
    }
}

TEST_CASE("validate_panel catches invariants on in-memory panels")
{
    auto panel = generate_synthetic_panel(DgpParams::defaults(), 2, 3);
    auto dup = panel;
    dup.observations.push_back(dup.observations.front());
    CHECK_THROWS_WITH_AS(validate_panel(dup), doctest::Contains("duplicate"), ValidationError);

    auto unknown = panel;
    unknown.observations[0].dest = "ZZZ";
    CHECK_THROWS_WITH_AS(validate_panel(unknown), doctest::Contains("unknown airport"), ValidationError);
}
