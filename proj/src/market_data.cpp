#include "airtax/market_data.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace airtax::market {

namespace {

constexpr std::array<std::pair<Region, std::string_view>, 5> kRegionLabels = {{
    {Region::Norte, "Norte"},
    {Region::Nordeste, "Nordeste"},
    {Region::CentroOeste, "CentroOeste"},
    {Region::Sudeste, "Sudeste"},
    {Region::Sul, "Sul"},
}};

[[noreturn]] void fail_at(std::string_view source, std::size_t line, const std::string& what)
{
    throw ValidationError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

bool parse_flag(std::string_view text)
{
    if (text == "0") {
        return false;
    }
    if (text == "1") {
        return true;
    }
    throw ValidationError("boolean field '" + std::string(text) + "' must be 0 or 1");
}

int parse_count(std::string_view text)
{
    double v = parse_double(text);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
        throw ValidationError("'" + std::string(text) + "' is not an integer count");
    }
    return static_cast<int>(v);
}

bool is_airport_code(std::string_view code)
{
    if (code.size() != 3) {
        return false;
    }
    for (char c : code) {
        if (!((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'))) {
            return false;
        }
    }
    return true;
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::string_view to_string(Region r)
{
    for (const auto& [region, label] : kRegionLabels) {
        if (region == r) {
            return label;
        }
    }
    return "?";
}

std::optional<Region> parse_region(std::string_view label)
{
    for (const auto& [region, text] : kRegionLabels) {
        if (text == label) {
            return region;
        }
    }
    return std::nullopt;
}

DgpParams DgpParams::defaults()
{
    DgpParams p;
    p.coefficients[index_of(Regressor::intercept)] = 8.0;
    p.coefficients[index_of(Regressor::log_pop_density)] = 0.3;
    p.coefficients[index_of(Regressor::log_income)] = 0.8;
    p.coefficients[index_of(Regressor::log_fare)] = -1.2;
    p.coefficients[index_of(Regressor::d_codeshare)] = -0.15;
    p.coefficients[index_of(Regressor::d_apagao)] = -0.1;
    p.coefficients[index_of(Regressor::d_crisis)] = 0.0;
    p.coefficients[index_of(Regressor::d_lowcost)] = 0.2;
    p.coefficients[index_of(Regressor::log_fare_x_share_other_mode)] = -0.4;
    p.coefficients[index_of(Regressor::log_fare_x_share_business)] = 0.5;
    p.coefficients[index_of(Regressor::log_fare_x_d_lowcost)] = -0.1;
    return p;
}

std::optional<std::string> check_observation(const PanelObservation& o, const Calendar& calendar)
{
    if (o.route_id.empty()) {
        return "empty route_id";
    }
    if (!calendar.sample.contains(o.period)) {
        return "period " + o.period.to_string() + " outside sample window " +
               calendar.sample.first.to_string() + ".." + calendar.sample.last.to_string();
    }
    if (!(o.pax > 0.0)) {
        return "non-positive demand pax (log undefined)";
    }
    if (!(o.avg_fare_brl > 0.0)) {
        return "non-positive avg_fare_brl";
    }
    if (!(o.pop_density > 0.0)) {
        return "non-positive pop_density";
    }
    if (!(o.income > 0.0)) {
        return "non-positive income";
    }
    if (!in_unit(o.share_business)) {
        return "share_business outside [0,1]";
    }
    if (!in_unit(o.share_other_mode)) {
        return "share_other_mode outside [0,1]";
    }
    if (!(o.hhi > 0.0 && o.hhi <= 1.0)) {
        return "hhi outside (0,1]";
    }
    if (!(o.load_factor > 0.0 && o.load_factor <= 1.0)) {
        return "load_factor outside (0,1]";
    }
    if (o.seats <= 0) {
        return "non-positive seats";
    }
    if (o.aircraft_class.empty()) {
        return "empty aircraft_class";
    }
    return std::nullopt;
}

void validate_panel(const Panel& panel, const Calendar& calendar)
{
    std::set<std::pair<std::string_view, int>> seen;
    for (std::size_t i = 0; i < panel.observations.size(); ++i) {
        const auto& o = panel.observations[i];
        const std::string where = "observation " + std::to_string(i) + " (" + o.route_id + " " +
                                  o.period.to_string() + "): ";
        if (auto err = check_observation(o, calendar)) {
            throw ValidationError(where + *err);
        }
        if (!panel.airports.contains(o.origin)) {
            throw ValidationError(where + "unknown airport code " + o.origin);
        }
        if (!panel.airports.contains(o.dest)) {
            throw ValidationError(where + "unknown airport code " + o.dest);
        }
        if (!seen.emplace(o.route_id, o.period.ordinal()).second) {
            throw ValidationError(where + "duplicate (route_id, period)");
        }
    }
}

AirportSet read_airports(std::istream& in, std::string_view source)
{
    AirportSet airports;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        fail_at(source, 1, "missing header");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kAirportsHeader) {
        fail_at(source, line_no, "header must be '" + std::string(kAirportsHeader) + "'");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            fail_at(source, line_no, "expected 4 fields, found " + std::to_string(fields.size()));
        }
        Airport a;
        a.code = std::string(fields[0]);
        if (!is_airport_code(a.code)) {
            fail_at(source, line_no, "airport code '" + a.code + "' is not a 3-letter identifier");
        }
        try {
            a.lat_deg = parse_double(fields[1]);
            a.lon_deg = parse_double(fields[2]);
        } catch (const ValidationError& e) {
            fail_at(source, line_no, e.what());
        }
        if (a.lat_deg < -90.0 || a.lat_deg > 90.0) {
            fail_at(source, line_no, "latitude out of range [-90,90]");
        }
        if (a.lon_deg <= -180.0 || a.lon_deg > 180.0) {
            fail_at(source, line_no, "longitude out of range (-180,180]");
        }
        auto region = parse_region(fields[3]);
        if (!region) {
            fail_at(source, line_no, "unknown region label '" + std::string(fields[3]) + "'");
        }
        a.region = *region;
        if (airports.contains(a.code)) {
            fail_at(source, line_no, "duplicate code " + a.code);
        }
        airports.emplace(a.code, a);
    }
    return airports;
}

AirportSet load_airports(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return read_airports(in, path.string());
}

Panel read_panel(std::istream& in, const AirportSet& airports, const Calendar& calendar,
                 std::string_view source)
{
    Panel panel;
    panel.airports = airports;
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) {
        fail_at(source, 1, "missing header");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kPanelHeader) {
        fail_at(source, line_no, "header must be '" + std::string(kPanelHeader) + "'");
    }
    std::set<std::pair<std::string, int>> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 16) {
            fail_at(source, line_no, "expected 16 fields, found " + std::to_string(f.size()));
        }
        PanelObservation o;
        try {
            o.route_id = std::string(f[0]);
            o.origin = std::string(f[1]);
            o.dest = std::string(f[2]);
            o.period = YearMonth::parse(f[3]);
            o.pax = parse_double(f[4]);
            o.avg_fare_brl = parse_double(f[5]);
            o.pop_density = parse_double(f[6]);
            o.income = parse_double(f[7]);
            o.share_business = parse_double(f[8]);
            o.share_other_mode = parse_double(f[9]);
            o.codeshare = parse_flag(f[10]);
            o.lowcost_present = parse_flag(f[11]);
            o.hhi = parse_double(f[12]);
            o.load_factor = parse_double(f[13]);
            o.seats = parse_count(f[14]);
            o.aircraft_class = std::string(f[15]);
        } catch (const ValidationError& e) {
            fail_at(source, line_no, e.what());
        }
        if (!airports.contains(o.origin)) {
            fail_at(source, line_no, "unknown airport code " + o.origin);
        }
        if (!airports.contains(o.dest)) {
            fail_at(source, line_no, "unknown airport code " + o.dest);
        }
        if (auto err = check_observation(o, calendar)) {
            fail_at(source, line_no, *err);
        }
        if (!seen.emplace(o.route_id, o.period.ordinal()).second) {
            fail_at(source, line_no,
                    "duplicate (route_id, period) " + o.route_id + " " + o.period.to_string());
        }
        panel.observations.push_back(std::move(o));
    }
    return panel;
}

Panel load_panel(const std::filesystem::path& path, const AirportSet& airports,
                 const Calendar& calendar)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    return read_panel(in, airports, calendar, path.string());
}

void write_airports(std::ostream& out, const AirportSet& airports)
{
    out << kAirportsHeader << '\n';
    for (const auto& [code, a] : airports) {
        out << code << ',' << format_double(a.lat_deg) << ',' << format_double(a.lon_deg) << ','
            << to_string(a.region) << '\n';
    }
}

void write_panel(std::ostream& out, const Panel& panel)
{
    out << kPanelHeader << '\n';
    for (const auto& o : panel.observations) {
        out << o.route_id << ',' << o.origin << ',' << o.dest << ',' << o.period.to_string() << ','
            << format_double(o.pax) << ',' << format_double(o.avg_fare_brl) << ','
            << format_double(o.pop_density) << ',' << format_double(o.income) << ','
            << format_double(o.share_business) << ',' << format_double(o.share_other_mode) << ','
            << (o.codeshare ? '1' : '0') << ',' << (o.lowcost_present ? '1' : '0') << ','
            << format_double(o.hhi) << ',' << format_double(o.load_factor) << ',' << o.seats << ','
            << o.aircraft_class << '\n';
    }
}

const AirportSet& builtin_airports()
{
    static const AirportSet airports = [] {
        std::istringstream in(R"(code,lat_deg,lon_deg,region
GRU,-23.4356,-46.4731,Sudeste
CGH,-23.6261,-46.6564,Sudeste
GIG,-22.81,-43.2506,Sudeste
SDU,-22.9105,-43.1631,Sudeste
CNF,-19.6244,-43.9719,Sudeste
VCP,-23.0074,-47.1345,Sudeste
VIX,-20.2581,-40.2864,Sudeste
BSB,-15.8711,-47.9186,CentroOeste
GYN,-16.632,-49.2207,CentroOeste
CGB,-15.6529,-56.1167,CentroOeste
CGR,-20.4687,-54.6725,CentroOeste
POA,-29.9944,-51.1714,Sul
CWB,-25.5285,-49.1758,Sul
FLN,-27.6703,-48.5525,Sul
IGU,-25.6003,-54.485,Sul
REC,-8.1264,-34.9236,Nordeste
SSA,-12.9086,-38.3225,Nordeste
FOR,-3.7763,-38.5326,Nordeste
NAT,-5.7681,-35.3761,Nordeste
MCZ,-9.5108,-35.7917,Nordeste
JPA,-7.1458,-34.9486,Nordeste
SLZ,-2.5854,-44.2341,Nordeste
THE,-5.0599,-42.8235,Nordeste
AJU,-10.984,-37.0703,Nordeste
BEL,-1.3792,-48.4763,Norte
MAO,-3.0386,-60.0497,Norte
PVH,-8.7093,-63.9023,Norte
RBR,-9.8689,-67.8981,Norte
MCP,0.0506,-51.0722,Norte
BVB,2.8414,-60.6922,Norte
PMW,-10.2915,-48.357,Norte
)");
        return read_airports(in, "builtin");
    }();
    return airports;
}

Panel generate_synthetic_panel(const DgpParams& params, int n_routes, int n_periods,
                               const Calendar& calendar)
{
    if (n_routes < 1 || n_periods < 1) {
        throw std::invalid_argument("n_routes and n_periods must be >= 1");
    }
    if (params.noise_sd < 0.0 || params.route_effect_sd < 0.0) {
        throw std::invalid_argument("noise_sd and route_effect_sd must be >= 0");
    }
    const int first = calendar.sample.first.ordinal();
    if (first + n_periods - 1 > calendar.sample.last.ordinal()) {
        throw std::invalid_argument("n_periods exceeds the sample window");
    }

    std::mt19937_64 rng(params.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    auto log_uniform = [&](double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    };
    auto bernoulli = [&](double p) { return unit(rng) < p; };

    Panel panel;
    panel.airports = builtin_airports();
    std::vector<const Airport*> pool;
    for (const auto& [code, a] : panel.airports) {
        pool.push_back(&a);
    }
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);

    struct RouteTraits {
        std::string id;
        std::string origin;
        std::string dest;
        std::string aircraft_class;
        int seats;
        double density;
        double income;
        double effect;
    };
    const int width = std::max<int>(4, static_cast<int>(std::to_string(n_routes).size()));
    std::vector<RouteTraits> routes;
    routes.reserve(static_cast<std::size_t>(n_routes));
    for (int r = 0; r < n_routes; ++r) {
        RouteTraits t;
        std::string num = std::to_string(r + 1);
        t.id = "R" + std::string(static_cast<std::size_t>(width) - num.size(), '0') + num;
        std::size_t o = pick(rng);
        std::size_t d = pick(rng);
        while (d == o) {
            d = pick(rng);
        }
        t.origin = pool[o]->code;
        t.dest = pool[d]->code;
        const bool wide = bernoulli(0.2);
        t.aircraft_class = wide ? "wide" : "narrow";
        t.seats = wide ? static_cast<int>(uniform(250.0, 351.0)) : static_cast<int>(uniform(120.0, 221.0));
        t.density = log_uniform(20.0, 3000.0);
        t.income = log_uniform(800.0, 4000.0);
        t.effect = params.route_effect_sd * normal(rng);
        routes.push_back(std::move(t));
    }

    const auto& b = params.coefficients;
    auto beta = [&](Regressor r) { return b[index_of(r)]; };
    panel.observations.reserve(static_cast<std::size_t>(n_routes) * static_cast<std::size_t>(n_periods));
    for (const auto& route : routes) {
        for (int t = 0; t < n_periods; ++t) {
            PanelObservation o;
            o.route_id = route.id;
            o.origin = route.origin;
            o.dest = route.dest;
            o.period = YearMonth::from_ordinal(first + t);
            o.pop_density = route.density * std::exp(0.002 * t + 0.05 * normal(rng));
            o.income = route.income * std::exp(0.004 * t + 0.08 * normal(rng));
            o.avg_fare_brl = log_uniform(150.0, 800.0);
            o.share_business = uniform(0.0, 0.8);
            o.share_other_mode = uniform(0.0, 0.8);
            o.codeshare = bernoulli(0.3);
            o.lowcost_present = bernoulli(0.3);
            o.hhi = uniform(0.2, 1.0);
            o.load_factor = uniform(0.5, 0.98);
            o.seats = route.seats;
            o.aircraft_class = route.aircraft_class;

            const double log_fare = std::log(o.avg_fare_brl);
            const double lowcost = o.lowcost_present ? 1.0 : 0.0;
            double log_pax = beta(Regressor::intercept) +
                             beta(Regressor::log_pop_density) * std::log(o.pop_density) +
                             beta(Regressor::log_income) * std::log(o.income) +
                             beta(Regressor::log_fare) * log_fare +
                             beta(Regressor::d_codeshare) * (o.codeshare ? 1.0 : 0.0) +
                             beta(Regressor::d_apagao) * (calendar.is_apagao(o.period) ? 1.0 : 0.0) +
                             beta(Regressor::d_crisis) * (calendar.is_crisis(o.period) ? 1.0 : 0.0) +
                             beta(Regressor::d_lowcost) * lowcost +
                             beta(Regressor::log_fare_x_share_other_mode) * log_fare * o.share_other_mode +
                             beta(Regressor::log_fare_x_share_business) * log_fare * o.share_business +
                             beta(Regressor::log_fare_x_d_lowcost) * log_fare * lowcost;
            log_pax += route.effect + params.noise_sd * normal(rng);
            o.pax = std::exp(log_pax);
            panel.observations.push_back(std::move(o));
        }
    }
    return panel;
}

}  // namespace airtax::market
