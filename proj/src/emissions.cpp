#include "airtax/emissions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "airtax/common.hpp"

namespace airtax::emissions {

namespace {

double to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

AircraftFuelProfile::AircraftFuelProfile(std::string class_name, std::vector<FuelBreakpoint> breakpoints,
                                         double pax_to_freight_factor)
    : class_name_(std::move(class_name)),
      breakpoints_(std::move(breakpoints)),
      pax_to_freight_factor_(pax_to_freight_factor)
{
    const std::string where = "fuel profile '" + class_name_ + "': ";
    if (class_name_.empty()) {
        throw ValidationError("fuel profile with empty class name");
    }
    if (breakpoints_.size() < 2) {
        throw ValidationError(where + "needs at least 2 breakpoints");
    }
    if (!(pax_to_freight_factor_ > 0.0 && pax_to_freight_factor_ <= 1.0)) {
        throw ValidationError(where + "pax_to_freight_factor outside (0,1]");
    }
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
        const auto& bp = breakpoints_[i];
        if (!(bp.distance_km > 0.0) || !(bp.fuel_kg > 0.0) || !std::isfinite(bp.distance_km) ||
            !std::isfinite(bp.fuel_kg)) {
            throw ValidationError(where + "breakpoint " + std::to_string(i) + " not positive");
        }
        if (i > 0) {
            if (!(bp.distance_km > breakpoints_[i - 1].distance_km)) {
                throw ValidationError(where + "distances not strictly increasing at breakpoint " +
                                      std::to_string(i));
            }
            if (bp.fuel_kg < breakpoints_[i - 1].fuel_kg) {
                throw ValidationError(where + "fuel decreasing at breakpoint " + std::to_string(i));
            }
        }
    }
}

void EmissionFactors::validate() const
{
    if (!(co2_per_fuel > 0.0) || !std::isfinite(co2_per_fuel)) {
        throw ValidationError("co2_per_fuel must be positive");
    }
    if (correction_table.empty()) {
        throw ValidationError("correction_table is empty");
    }
    for (std::size_t i = 0; i < correction_table.size(); ++i) {
        const auto& band = correction_table[i];
        const bool last = i + 1 == correction_table.size();
        if (last != !band.upper_km.has_value()) {
            throw ValidationError("correction_table: only the last band may be (and must be) unbounded");
        }
        if (!std::isfinite(band.add_km) || band.add_km < 0.0) {
            throw ValidationError("correction_table: add_km must be >= 0");
        }
        if (band.upper_km && i > 0 && correction_table[i - 1].upper_km &&
            !(*band.upper_km > *correction_table[i - 1].upper_km)) {
            throw ValidationError("correction_table: upper bounds must be increasing");
        }
    }
}

double great_circle_km(const GeoPoint& a, const GeoPoint& b)
{
    const double lat1 = to_radians(a.lat_deg);
    const double lat2 = to_radians(b.lat_deg);
    const double dlat = lat2 - lat1;
    const double dlon = to_radians(b.lon_deg - a.lon_deg);
    const double s_lat = std::sin(dlat / 2.0);
    const double s_lon = std::sin(dlon / 2.0);
    const double h = std::clamp(s_lat * s_lat + std::cos(lat1) * std::cos(lat2) * s_lon * s_lon, 0.0, 1.0);
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

double corrected_distance_km(double gcd_km, const EmissionFactors& factors)
{
    for (const auto& band : factors.correction_table) {
        if (!band.upper_km || gcd_km < *band.upper_km) {
            return gcd_km + band.add_km;
        }
    }
    // validate() guarantees an unbounded last band
    return gcd_km + factors.correction_table.back().add_km;
}

double fuel_burn_kg(const AircraftFuelProfile& profile, double corrected_km)
{
    const auto& bps = profile.breakpoints();
    if (!(corrected_km >= bps.front().distance_km && corrected_km <= bps.back().distance_km)) {
        throw NumericalError("distance " + format_double(corrected_km) + " km outside fuel table '" +
                             profile.class_name() + "' range [" + format_double(bps.front().distance_km) +
                             ", " + format_double(bps.back().distance_km) + "]");
    }
    auto upper = std::lower_bound(bps.begin(), bps.end(), corrected_km,
                                  [](const FuelBreakpoint& bp, double d) { return bp.distance_km < d; });
    if (upper->distance_km == corrected_km) {
        return upper->fuel_kg;
    }
    auto lower = std::prev(upper);
    const double w = (corrected_km - lower->distance_km) / (upper->distance_km - lower->distance_km);
    return lower->fuel_kg + w * (upper->fuel_kg - lower->fuel_kg);
}

double co2_per_pax_tonnes(double fuel_kg, const AircraftFuelProfile& profile, int seats,
                          double load_factor, const EmissionFactors& factors)
{
    if (seats <= 0) {
        throw ValidationError("seats must be positive");
    }
    if (!(load_factor > 0.0 && load_factor <= 1.0)) {
        throw ValidationError("load_factor must lie in (0,1]");
    }
    const double kg = factors.co2_per_fuel * fuel_kg * profile.pax_to_freight_factor() /
                      (static_cast<double>(seats) * load_factor);
    return kg / 1000.0;
}

RouteEmission route_emission(const GeoPoint& origin, const GeoPoint& dest,
                             const AircraftFuelProfile& profile, int seats, double load_factor,
                             const EmissionFactors& factors)
{
    RouteEmission e;
    e.gcd_km = great_circle_km(origin, dest);
    e.corrected_km = corrected_distance_km(e.gcd_km, factors);
    e.fuel_kg = fuel_burn_kg(profile, e.corrected_km);
    e.co2_per_pax_t = co2_per_pax_tonnes(e.fuel_kg, profile, seats, load_factor, factors);
    return e;
}

FuelTables read_fuel_tables(std::istream& in)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("fuel tables: ") + e.what());
    }
    if (!doc.is_object() || doc.empty()) {
        throw ValidationError("fuel tables: expected a non-empty object of class_name -> table");
    }
    FuelTables tables;
    for (const auto& [name, entry] : doc.items()) {
        try {
            std::vector<FuelBreakpoint> bps;
            for (const auto& pair : entry.at("breakpoints")) {
                if (!pair.is_array() || pair.size() != 2) {
                    throw ValidationError("fuel tables: '" + name + "' breakpoint is not [km, kg]");
                }
                bps.push_back({pair[0].get<double>(), pair[1].get<double>()});
            }
            for (const auto& [key, _] : entry.items()) {
                if (key != "breakpoints" && key != "pax_to_freight_factor") {
                    throw ValidationError("fuel tables: '" + name + "' has unknown key '" + key + "'");
                }
            }
            tables.emplace(name, AircraftFuelProfile(name, std::move(bps),
                                                     entry.at("pax_to_freight_factor").get<double>()));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("fuel tables: '" + name + "': " + e.what());
        }
    }
    return tables;
}

FuelTables load_fuel_tables(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return read_fuel_tables(in);
}

EmissionFactors read_emission_factors(std::istream& in)
{
    EmissionFactors f;
    try {
        auto doc = nlohmann::json::parse(in);
        for (const auto& [key, _] : doc.items()) {
            if (key != "co2_per_fuel" && key != "correction_table") {
                throw ValidationError("emission factors: unknown key '" + key + "'");
            }
        }
        f.co2_per_fuel = doc.at("co2_per_fuel").get<double>();
        f.correction_table.clear();
        for (const auto& band : doc.at("correction_table")) {
            if (!band.is_array() || band.size() != 2) {
                throw ValidationError("emission factors: band is not [upper_km|null, add_km]");
            }
            CorrectionBand b;
            if (!band[0].is_null()) {
                b.upper_km = band[0].get<double>();
            }
            b.add_km = band[1].get<double>();
            f.correction_table.push_back(b);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("emission factors: ") + e.what());
    }
    f.validate();
    return f;
}

EmissionFactors load_emission_factors(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return read_emission_factors(in);
}

}  // namespace airtax::emissions
