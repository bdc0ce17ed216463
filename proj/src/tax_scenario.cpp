#include "airtax/tax_scenario.hpp"

#include <cmath>

namespace airtax::tax {

void TaxScenario::validate() const
{
    if (!(tax_eur_per_tonne >= 0.0) || !std::isfinite(tax_eur_per_tonne)) {
        throw ValidationError("tax rate must be a finite value >= 0");
    }
    if (!(fx_brl_per_eur > 0.0) || !std::isfinite(fx_brl_per_eur)) {
        throw ValidationError("fx_brl_per_eur must be positive");
    }
}

PassThroughMode PassThroughMode::parse(std::string_view text)
{
    if (text == "lerner" || text == "lerner_cournot") {
        return {PassThroughKind::lerner_cournot, 1.0};
    }
    if (text == "full") {
        return {PassThroughKind::full, 1.0};
    }
    constexpr std::string_view prefix = "fixed:";
    if (text.starts_with(prefix)) {
        const double rho = parse_double(text.substr(prefix.size()));
        if (rho < 0.0) {
            throw ValidationError("fixed pass-through rate must be >= 0");
        }
        return {PassThroughKind::fixed, rho};
    }
    throw ValidationError("pass-through mode '" + std::string(text) + "' is not lerner|full|fixed:<rho>");
}

std::string PassThroughMode::to_string() const
{
    switch (kind) {
    case PassThroughKind::lerner_cournot:
        return "lerner";
    case PassThroughKind::full:
        return "full";
    case PassThroughKind::fixed:
        return "fixed:" + format_double(fixed_rate);
    }
    return "?";
}

double per_ticket_tax_brl(double co2_per_pax_t, const TaxScenario& scenario)
{
    return co2_per_pax_t * scenario.tax_eur_per_tonne * scenario.fx_brl_per_eur;
}

double passthrough_rate(const PassThroughParams& p)
{
    switch (p.mode.kind) {
    case PassThroughKind::full:
        return 1.0;
    case PassThroughKind::fixed:
        return p.mode.fixed_rate;
    case PassThroughKind::lerner_cournot:
        break;
    }
    if (!(p.hhi > 0.0 && p.hhi <= 1.0)) {
        throw ValidationError("hhi outside (0,1]");
    }
    if (!(p.elasticity < 0.0) || std::abs(p.elasticity) <= p.hhi) {
        throw PassThroughUndefined("pass-through undefined: |elasticity| " + format_double(std::abs(p.elasticity)) +
                                   " <= hhi " + format_double(p.hhi));
    }
    return 1.0 / (1.0 - p.hhi / std::abs(p.elasticity));
}

double shifted_fare(double fare_before, double tax_per_ticket, double rho)
{
    return fare_before + rho * tax_per_ticket;
}

double project_demand(double q0, double p0, double p1, double epsilon)
{
    if (!(p0 > 0.0) || !(p1 > 0.0)) {
        throw ValidationError("demand projection needs positive prices");
    }
    return q0 * std::pow(p1 / p0, epsilon);
}

RouteImpact route_impact(const market::PanelObservation& obs, double co2_per_pax_t,
                         const TaxScenario& scenario, const econometrics::FitResult& fit,
                         const PassThroughMode& mode)
{
    RouteImpact r;
    r.route_id = obs.route_id;
    r.period = obs.period;
    r.co2_per_pax_t = co2_per_pax_t;
    r.elasticity = econometrics::effective_elasticity(fit, obs.share_business, obs.share_other_mode,
                                                      obs.lowcost_present);
    r.tax_per_ticket_brl = per_ticket_tax_brl(co2_per_pax_t, scenario);
    r.passthrough_rate = passthrough_rate({obs.hhi, r.elasticity, mode});
    r.fare_before = obs.avg_fare_brl;
    r.fare_after = shifted_fare(r.fare_before, r.tax_per_ticket_brl, r.passthrough_rate);
    r.q_before = obs.pax;
    r.q_after = project_demand(r.q_before, r.fare_before, r.fare_after, r.elasticity);
    r.loss_pax = r.q_before - r.q_after;
    r.loss_fraction = r.q_before > 0.0 ? r.loss_pax / r.q_before : 0.0;
    return r;
}

}  // namespace airtax::tax
