#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "airtax/common.hpp"
#include "airtax/model_terms.hpp"

namespace airtax::market {

enum class Region { Norte, Nordeste, CentroOeste, Sudeste, Sul };

std::string_view to_string(Region r);
std::optional<Region> parse_region(std::string_view label);

struct Airport {
    std::string code;
    double lat_deg = 0.0;
    double lon_deg = 0.0;
    Region region = Region::Sudeste;

    friend bool operator==(const Airport&, const Airport&) = default;
};

/// Keyed by code, so iteration order is deterministic.
using AirportSet = std::map<std::string, Airport, std::less<>>;

/// Sample window and the two dated dummy windows.
struct Calendar {
    MonthWindow sample{{2003, 1}, {2013, 12}};
    MonthWindow apagao{{2006, 10}, {2007, 7}};
    MonthWindow crisis{{2008, 10}, {2008, 12}};

    bool is_apagao(const YearMonth& m) const { return apagao.contains(m); }
    bool is_crisis(const YearMonth& m) const { return crisis.contains(m); }
};

/// One route-month record.
struct PanelObservation {
    std::string route_id;
    std::string origin;
    std::string dest;
    YearMonth period;
    double pax = 0.0;  // passengers; real-valued so synthetic panels stay exact
    double avg_fare_brl = 0.0;
    double pop_density = 0.0;
    double income = 0.0;
    double share_business = 0.0;
    double share_other_mode = 0.0;
    bool codeshare = false;
    bool lowcost_present = false;
    double hhi = 1.0;
    double load_factor = 1.0;
    int seats = 0;  // seats per flight
    std::string aircraft_class;

    friend bool operator==(const PanelObservation&, const PanelObservation&) = default;
};

struct Panel {
    std::vector<PanelObservation> observations;
    AirportSet airports;

    friend bool operator==(const Panel&, const Panel&) = default;
};

/// Ground truth for synthetic panels.
struct DgpParams {
    CoefficientArray coefficients;
    double noise_sd = 0.3;
    /// Spread of the per-route log-demand level absorbed by fixed effects.
    double route_effect_sd = 0.5;
    std::uint64_t seed = 42;

    /// Signs follow the estimated demand equation; crisis effect is zero.
    static DgpParams defaults();
};

/// Checks one record against every field rule; returns the first violation.
std::optional<std::string> check_observation(const PanelObservation& obs, const Calendar& calendar);

/// Validates the panel-level invariants: unique (route_id, period), resolvable airports.
void validate_panel(const Panel& panel, const Calendar& calendar = {});

AirportSet load_airports(const std::filesystem::path& path);
AirportSet read_airports(std::istream& in, std::string_view source = "airports.csv");

Panel load_panel(const std::filesystem::path& path, const AirportSet& airports,
                 const Calendar& calendar = {});
Panel read_panel(std::istream& in, const AirportSet& airports, const Calendar& calendar = {},
                 std::string_view source = "panel.csv");

void write_airports(std::ostream& out, const AirportSet& airports);
void write_panel(std::ostream& out, const Panel& panel);

inline constexpr std::string_view kAirportsHeader = "code,lat_deg,lon_deg,region";
inline constexpr std::string_view kPanelHeader =
    "route_id,origin,dest,period,pax,avg_fare_brl,pop_density,income,share_business,"
    "share_other_mode,codeshare,lowcost_present,hhi,load_factor,seats,aircraft_class";

/// Brazilian airports used by the synthetic generator.
const AirportSet& builtin_airports();

/// Deterministic for fixed params and dimensions. Periods start at the sample window start.
Panel generate_synthetic_panel(const DgpParams& params, int n_routes, int n_periods,
                               const Calendar& calendar = {});

}  // namespace airtax::market
