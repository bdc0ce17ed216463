#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace airtax {

/// Regressors of the demand equation, in column order. Column identity is positional.
enum class Regressor : std::size_t {
    intercept,
    log_pop_density,
    log_income,
    log_fare,
    d_codeshare,
    d_apagao,
    d_crisis,
    d_lowcost,
    log_fare_x_share_other_mode,
    log_fare_x_share_business,
    log_fare_x_d_lowcost,
};

inline constexpr std::size_t kRegressorCount = 11;

inline constexpr std::array<std::string_view, kRegressorCount> kRegressorNames = {
    "intercept",
    "log_pop_density",
    "log_income",
    "log_fare",
    "d_codeshare",
    "d_apagao",
    "d_crisis",
    "d_lowcost",
    "log_fare_x_share_other_mode",
    "log_fare_x_share_business",
    "log_fare_x_d_lowcost",
};

constexpr std::size_t index_of(Regressor r) { return static_cast<std::size_t>(r); }
constexpr std::string_view name_of(Regressor r) { return kRegressorNames[index_of(r)]; }

/// One coefficient per regressor, indexed by Regressor.
using CoefficientArray = std::array<double, kRegressorCount>;

}  // namespace airtax
