#pragma once

#include <string>
#include <string_view>

#include "airtax/common.hpp"
#include "airtax/econometrics.hpp"
#include "airtax/market_data.hpp"

namespace airtax::tax {

struct TaxScenario {
    double tax_eur_per_tonne = 0.0;
    double fx_brl_per_eur = 0.0;
    std::string label;

    void validate() const;
};

enum class PassThroughKind { lerner_cournot, full, fixed };

struct PassThroughMode {
    PassThroughKind kind = PassThroughKind::lerner_cournot;
    double fixed_rate = 1.0;  // used by PassThroughKind::fixed only

    /// Accepts "lerner", "full" or "fixed:<rho>".
    static PassThroughMode parse(std::string_view text);
    std::string to_string() const;

    friend bool operator==(const PassThroughMode&, const PassThroughMode&) = default;
};

struct PassThroughParams {
    double hhi = 1.0;
    double elasticity = -1.0;
    PassThroughMode mode;
};

/// Raised when the Cournot relation has no finite solution (|elasticity| <= hhi).
class PassThroughUndefined : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct RouteImpact {
    std::string route_id;
    YearMonth period;
    double co2_per_pax_t = 0.0;
    double elasticity = 0.0;
    double tax_per_ticket_brl = 0.0;
    double passthrough_rate = 0.0;
    double fare_before = 0.0;
    double fare_after = 0.0;
    double q_before = 0.0;
    double q_after = 0.0;
    double loss_pax = 0.0;
    double loss_fraction = 0.0;
};

double per_ticket_tax_brl(double co2_per_pax_t, const TaxScenario& scenario);

/// lerner_cournot: 1 / (1 - hhi/|elasticity|); full: 1; fixed: the configured rate.
double passthrough_rate(const PassThroughParams& params);

double shifted_fare(double fare_before, double tax_per_ticket, double rho);

/// Constant-elasticity projection q0 * (p1/p0)^epsilon.
double project_demand(double q0, double p0, double p1, double epsilon);

/// Elasticity, tax, pass-through, fare and demand for one route-month.
/// Throws PassThroughUndefined for routes the relation cannot price.
RouteImpact route_impact(const market::PanelObservation& obs, double co2_per_pax_t,
                         const TaxScenario& scenario, const econometrics::FitResult& fit,
                         const PassThroughMode& mode);

}  // namespace airtax::tax
