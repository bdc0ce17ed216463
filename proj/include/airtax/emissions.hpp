#pragma once

// CO2-per-passenger estimation following the ICAO carbon calculator recipe:
// great-circle distance, stage-length correction, fuel-table interpolation,
// then allocation of fuel CO2 to passengers by seats and load factor.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace airtax::emissions {

inline constexpr double kEarthRadiusKm = 6371.0;

struct GeoPoint {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
};

struct FuelBreakpoint {
    double distance_km = 0.0;
    double fuel_kg = 0.0;
};

class AircraftFuelProfile {
public:
    /// Throws ValidationError unless there are >= 2 breakpoints with strictly increasing
    /// positive distances and non-decreasing positive fuel.
    AircraftFuelProfile(std::string class_name, std::vector<FuelBreakpoint> breakpoints,
                        double pax_to_freight_factor);

    const std::string& class_name() const { return class_name_; }
    const std::vector<FuelBreakpoint>& breakpoints() const { return breakpoints_; }
    double pax_to_freight_factor() const { return pax_to_freight_factor_; }
    double min_distance_km() const { return breakpoints_.front().distance_km; }
    double max_distance_km() const { return breakpoints_.back().distance_km; }

private:
    std::string class_name_;
    std::vector<FuelBreakpoint> breakpoints_;
    double pax_to_freight_factor_;
};

/// A distance band: applies to gcd < upper_km (unbounded when empty).
struct CorrectionBand {
    std::optional<double> upper_km;
    double add_km = 0.0;
};

struct EmissionFactors {
    double co2_per_fuel = 3.157;  // kg CO2 per kg fuel
    std::vector<CorrectionBand> correction_table = {{550.0, 50.0}, {5500.0, 100.0}, {std::nullopt, 125.0}};

    void validate() const;
};

using FuelTables = std::map<std::string, AircraftFuelProfile, std::less<>>;

/// Haversine distance on a sphere of radius kEarthRadiusKm.
double great_circle_km(const GeoPoint& a, const GeoPoint& b);

/// Bands are right-open: a distance equal to a band's upper bound belongs to the next band.
double corrected_distance_km(double gcd_km, const EmissionFactors& factors);

/// Linear interpolation in the profile's table. Throws NumericalError outside the table.
double fuel_burn_kg(const AircraftFuelProfile& profile, double corrected_km);

/// Tonnes of CO2 attributed to one passenger of a flight burning fuel_kg.
double co2_per_pax_tonnes(double fuel_kg, const AircraftFuelProfile& profile, int seats,
                          double load_factor, const EmissionFactors& factors);

/// The whole chain for one origin/destination pair.
struct RouteEmission {
    double gcd_km = 0.0;
    double corrected_km = 0.0;
    double fuel_kg = 0.0;
    double co2_per_pax_t = 0.0;
};

RouteEmission route_emission(const GeoPoint& origin, const GeoPoint& dest,
                             const AircraftFuelProfile& profile, int seats, double load_factor,
                             const EmissionFactors& factors);

FuelTables read_fuel_tables(std::istream& in);
FuelTables load_fuel_tables(const std::filesystem::path& path);
EmissionFactors read_emission_factors(std::istream& in);
EmissionFactors load_emission_factors(const std::filesystem::path& path);

}  // namespace airtax::emissions
