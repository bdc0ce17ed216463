#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "airtax/common.hpp"
#include "airtax/market_data.hpp"
#include "airtax/model_terms.hpp"

namespace airtax::econometrics {

/// The log-log demand equation. The regressor list is fixed; only the estimator flags vary.
struct ModelSpec {
    bool use_route_fixed_effects = true;
    bool robust_se = true;

    /// Regressors that become columns: all of them, minus the intercept under fixed effects.
    std::vector<Regressor> regressors() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct RowKey {
    std::string route_id;
    YearMonth period;
};

struct DesignMatrix {
    Eigen::VectorXd response;  // ln(pax)
    Eigen::MatrixXd columns;
    std::vector<std::string> column_names;
    std::vector<RowKey> row_index;
    /// Parameters swept out before fitting (one per route after the within transform).
    int absorbed_parameters = 0;

    Eigen::Index rows() const { return columns.rows(); }
    Eigen::Index cols() const { return columns.cols(); }
};

struct FitResult {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd vcov;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd residuals;  // empty when loaded from fit.json
    std::vector<std::string> names;
    std::size_t n_obs = 0;
    long df_resid = 0;
    double r_squared = 0.0;
    ModelSpec spec;

    std::optional<double> coefficient(std::string_view name) const;
    /// Zero when the regressor is absent from the fit (the intercept under fixed effects).
    double coefficient_or_zero(Regressor r) const;
};

/// Column value of a regressor for one observation, before any transform.
double regressor_value(Regressor r, const market::PanelObservation& obs,
                       const market::Calendar& calendar);

DesignMatrix build_design_matrix(const market::Panel& panel, const ModelSpec& spec,
                                 const market::Calendar& calendar = {});

/// Demeans the response and every column within each route_id group.
DesignMatrix within_transform(DesignMatrix matrix);

/// A column is collinear when its norm after orthogonalization against the
/// preceding columns falls below this fraction of its original norm.
inline constexpr double kRankTolerance = 1e-10;

/// Householder-QR least squares. vcov is sigma^2 (X'X)^-1, or HC1 when robust.
FitResult fit_ols(const DesignMatrix& matrix, bool robust);

/// Builds, transforms and fits in one call.
FitResult estimate(const market::Panel& panel, const ModelSpec& spec,
                   const market::Calendar& calendar = {});

/// Route-specific price elasticity implied by the fare term and its three interactions.
double effective_elasticity(const FitResult& fit, double share_business, double share_other_mode,
                            bool lowcost_present);

std::string fit_to_json(const FitResult& fit);
FitResult fit_from_json(std::string_view text);

}  // namespace airtax::econometrics
