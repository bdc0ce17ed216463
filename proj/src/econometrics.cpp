#include "airtax/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

namespace airtax::econometrics {

std::vector<Regressor> ModelSpec::regressors() const
{
    std::vector<Regressor> out;
    for (std::size_t i = 0; i < kRegressorCount; ++i) {
        auto r = static_cast<Regressor>(i);
        if (use_route_fixed_effects && r == Regressor::intercept) {
            continue;
        }
        out.push_back(r);
    }
    return out;
}

std::optional<double> FitResult::coefficient(std::string_view name) const
{
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) {
            return coefficients[static_cast<Eigen::Index>(i)];
        }
    }
    return std::nullopt;
}

double FitResult::coefficient_or_zero(Regressor r) const
{
    return coefficient(name_of(r)).value_or(0.0);
}

double regressor_value(Regressor r, const market::PanelObservation& o, const market::Calendar& calendar)
{
    auto flag = [](bool b) { return b ? 1.0 : 0.0; };
    switch (r) {
    case Regressor::intercept:
        return 1.0;
    case Regressor::log_pop_density:
        return std::log(o.pop_density);
    case Regressor::log_income:
        return std::log(o.income);
    case Regressor::log_fare:
        return std::log(o.avg_fare_brl);
    case Regressor::d_codeshare:
        return flag(o.codeshare);
    case Regressor::d_apagao:
        return flag(calendar.is_apagao(o.period));
    case Regressor::d_crisis:
        return flag(calendar.is_crisis(o.period));
    case Regressor::d_lowcost:
        return flag(o.lowcost_present);
    case Regressor::log_fare_x_share_other_mode:
        return std::log(o.avg_fare_brl) * o.share_other_mode;
    case Regressor::log_fare_x_share_business:
        return std::log(o.avg_fare_brl) * o.share_business;
    case Regressor::log_fare_x_d_lowcost:
        return std::log(o.avg_fare_brl) * flag(o.lowcost_present);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

DesignMatrix build_design_matrix(const market::Panel& panel, const ModelSpec& spec,
                                 const market::Calendar& calendar)
{
    if (panel.observations.empty()) {
        throw ValidationError("cannot build a design matrix from an empty panel");
    }
    const auto regs = spec.regressors();
    const auto n = static_cast<Eigen::Index>(panel.observations.size());
    const auto k = static_cast<Eigen::Index>(regs.size());

    DesignMatrix m;
    m.response.resize(n);
    m.columns.resize(n, k);
    m.row_index.reserve(panel.observations.size());
    for (auto r : regs) {
        m.column_names.emplace_back(name_of(r));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& o = panel.observations[static_cast<std::size_t>(i)];
        if (!(o.pax > 0.0) || !(o.avg_fare_brl > 0.0) || !(o.income > 0.0) || !(o.pop_density > 0.0)) {
            throw ValidationError("row " + std::to_string(i) + " (" + o.route_id + " " +
                                  o.period.to_string() + "): log of a non-positive value");
        }
        m.response[i] = std::log(o.pax);
        for (Eigen::Index j = 0; j < k; ++j) {
            m.columns(i, j) = regressor_value(regs[static_cast<std::size_t>(j)], o, calendar);
        }
        m.row_index.push_back({o.route_id, o.period});
    }
    if (!m.response.allFinite() || !m.columns.allFinite()) {
        throw ValidationError("design matrix has non-finite entries");
    }
    if (spec.use_route_fixed_effects) {
        return within_transform(std::move(m));
    }
    return m;
}

DesignMatrix within_transform(DesignMatrix m)
{
    std::map<std::string_view, int> group_of;
    std::vector<int> group(m.row_index.size());
    for (std::size_t i = 0; i < m.row_index.size(); ++i) {
        auto [it, _] = group_of.try_emplace(m.row_index[i].route_id, static_cast<int>(group_of.size()));
        group[i] = it->second;
    }
    const auto g = static_cast<Eigen::Index>(group_of.size());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(g);
    Eigen::VectorXd y_sum = Eigen::VectorXd::Zero(g);
    Eigen::MatrixXd x_sum = Eigen::MatrixXd::Zero(g, m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const int gi = group[static_cast<std::size_t>(i)];
        counts[gi] += 1.0;
        y_sum[gi] += m.response[i];
        x_sum.row(gi) += m.columns.row(i);
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const int gi = group[static_cast<std::size_t>(i)];
        m.response[i] -= y_sum[gi] / counts[gi];
        m.columns.row(i) -= x_sum.row(gi) / counts[gi];
    }
    m.absorbed_parameters += static_cast<int>(g);
    return m;
}

FitResult fit_ols(const DesignMatrix& m, bool robust)
{
    const Eigen::Index n = m.rows();
    const Eigen::Index k = m.cols();
    if (n < k) {
        throw NumericalError("fewer rows (" + std::to_string(n) + ") than columns (" + std::to_string(k) + ")");
    }
    if (k == 0) {
        throw NumericalError("design matrix has no columns");
    }

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m.columns);
    const Eigen::MatrixXd& packed = qr.matrixQR();
    for (Eigen::Index j = 0; j < k; ++j) {
        const double original = m.columns.col(j).norm();
        if (!(std::abs(packed(j, j)) >= kRankTolerance * original) || original == 0.0) {
            const std::string name = j < static_cast<Eigen::Index>(m.column_names.size())
                                         ? m.column_names[static_cast<std::size_t>(j)]
                                         : "column " + std::to_string(j);
            throw NumericalError("rank deficient design: column '" + name +
                                 "' is collinear with the preceding columns");
        }
    }

    FitResult fit;
    fit.names = m.column_names;
    fit.spec = {m.absorbed_parameters > 0, robust};
    fit.n_obs = static_cast<std::size_t>(n);
    fit.coefficients = qr.solve(m.response);
    fit.residuals = m.response - m.columns * fit.coefficients;
    fit.df_resid = static_cast<long>(n) - static_cast<long>(k) - m.absorbed_parameters;

    const double ssr = fit.residuals.squaredNorm();
    const double sst = (m.response.array() - m.response.mean()).matrix().squaredNorm();
    if (sst > 0.0) {
        fit.r_squared = std::clamp(1.0 - ssr / sst, 0.0, 1.0);
    } else {
        fit.r_squared = ssr == 0.0 ? 1.0 : 0.0;
    }

    // (X'X)^-1 = R^-1 R^-T
    const auto upper = packed.topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv = upper.solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd bread = r_inv * r_inv.transpose();

    if (fit.df_resid <= 0) {
        fit.vcov = Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
    } else if (robust) {
        const Eigen::MatrixXd scored = m.columns.array().colwise() * fit.residuals.array();
        const Eigen::MatrixXd meat = scored.transpose() * scored;
        const double dof = static_cast<double>(n) / static_cast<double>(fit.df_resid);
        fit.vcov = dof * bread * meat * bread;
    } else {
        fit.vcov = (ssr / static_cast<double>(fit.df_resid)) * bread;
    }
    fit.vcov = 0.5 * (fit.vcov + fit.vcov.transpose()).eval();
    fit.std_errors = fit.vcov.diagonal().array().sqrt();
    return fit;
}

FitResult estimate(const market::Panel& panel, const ModelSpec& spec, const market::Calendar& calendar)
{
    auto fit = fit_ols(build_design_matrix(panel, spec, calendar), spec.robust_se);
    fit.spec = spec;
    return fit;
}

double effective_elasticity(const FitResult& fit, double share_business, double share_other_mode,
                            bool lowcost_present)
{
    return fit.coefficient_or_zero(Regressor::log_fare) +
           fit.coefficient_or_zero(Regressor::log_fare_x_share_other_mode) * share_other_mode +
           fit.coefficient_or_zero(Regressor::log_fare_x_share_business) * share_business +
           (lowcost_present ? fit.coefficient_or_zero(Regressor::log_fare_x_d_lowcost) : 0.0);
}

namespace {

nlohmann::ordered_json named_map(const std::vector<std::string>& names, const Eigen::VectorXd& values)
{
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double v = values[static_cast<Eigen::Index>(i)];
        if (std::isfinite(v)) {
            out[names[i]] = v;
        } else {
            out[names[i]] = nullptr;
        }
    }
    return out;
}

}  // namespace

std::string fit_to_json(const FitResult& fit)
{
    nlohmann::ordered_json doc;
    doc["coefficients"] = named_map(fit.names, fit.coefficients);
    doc["std_errors"] = named_map(fit.names, fit.std_errors);
    doc["n_obs"] = fit.n_obs;
    doc["df_resid"] = fit.df_resid;
    doc["r_squared"] = fit.r_squared;
    doc["spec"] = {{"use_route_fixed_effects", fit.spec.use_route_fixed_effects},
                   {"robust_se", fit.spec.robust_se}};
    return doc.dump(2) + "\n";
}

FitResult fit_from_json(std::string_view text)
{
    FitResult fit;
    try {
        auto doc = nlohmann::ordered_json::parse(text);
        fit.spec.use_route_fixed_effects = doc.at("spec").at("use_route_fixed_effects").get<bool>();
        fit.spec.robust_se = doc.at("spec").at("robust_se").get<bool>();
        fit.n_obs = doc.at("n_obs").get<std::size_t>();
        fit.df_resid = doc.value("df_resid", 0L);
        fit.r_squared = doc.at("r_squared").get<double>();

        const auto& coefs = doc.at("coefficients");
        const auto& ses = doc.at("std_errors");
        const auto k = static_cast<Eigen::Index>(coefs.size());
        fit.coefficients.resize(k);
        fit.std_errors.resize(k);
        Eigen::Index i = 0;
        for (const auto& [name, value] : coefs.items()) {
            bool known = false;
            for (auto n : kRegressorNames) {
                known = known || n == name;
            }
            if (!known) {
                throw ValidationError("fit.json: unknown regressor '" + name + "'");
            }
            fit.names.push_back(name);
            fit.coefficients[i] = value.get<double>();
            const auto& se = ses.at(name);
            fit.std_errors[i] = se.is_null() ? std::numeric_limits<double>::quiet_NaN() : se.get<double>();
            ++i;
        }
        fit.vcov = fit.std_errors.array().square().matrix().asDiagonal();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("fit.json: ") + e.what());
    }
    return fit;
}

}  // namespace airtax::econometrics
