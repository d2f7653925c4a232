#pragma once

// Poisson sample-size and power calculations under the normal approximation.

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "crashbench/csv.hpp"
#include "crashbench/model.hpp"
#include "crashbench/text.hpp"

namespace crashbench
{
inline double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/*!
 * Standard normal inverse CDF: Acklam's rational approximation followed by
 * one Halley step against erfc.
 *
 * Kept out of line so every caller sees the same libm result; constant
 * folding at some call sites would otherwise differ in the last bits.
 */
[[gnu::noinline]] inline double normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("normal quantile needs p in (0, 1)");

    static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02,
                                             -2.759285104469687e+02, 1.383577518672690e+02,
                                             -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02,
                                             -1.556989798598866e+02, 6.680131188771972e+01,
                                             -1.328068155288572e+01};
    static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01,
                                             -2.400758277161838e+00, -2.549732539343734e+00,
                                             4.374664141464968e+00, 2.938163982698783e+00};
    static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01,
                                             2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low)
    {
        double q = std::sqrt(-2 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    else if (p <= 1 - p_low)
    {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    }
    else
    {
        double q = std::sqrt(-2 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }

    // Halley refinement.
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
    x = x - u / (1 + x * u / 2);
    return x;
}

enum class EventRounding
{
    //! Fractional expected events (reproduces the published table).
    Continuous,
    //! Expected benchmark events rounded down to an integer (at least one).
    FloorExpectedEvents
};

struct PowerQuery
{
    //! Benchmark rate per million miles.
    double benchmark_rate = 0;
    //! ADS rate as a multiple of the benchmark.
    double relative_rate = 0.5;
    double alpha = 0.05;
    double target_power = 0.80;
    EventRounding rounding = EventRounding::Continuous;

    void validate() const
    {
        if (!(benchmark_rate > 0) || !std::isfinite(benchmark_rate))
            throw DomainError("benchmark rate must be positive");
        if (!(relative_rate > 0) || !std::isfinite(relative_rate))
            throw DomainError("relative rate must be positive");
        if (relative_rate == 1.0)
            throw DomainError("required mileage diverges at relative rate 1");
        if (!(alpha > 0 && alpha < 1))
            throw DomainError("alpha must lie in (0, 1)");
        if (!(target_power > 0 && target_power < 1))
            throw DomainError("target power must lie in (0, 1)");
    }
};

/*!
 * Million miles needed for a two-sided test at level alpha to detect an ADS
 * rate r * lambda with the target power:
 *
 *   t = [(z_{1-a/2} sqrt(lambda) + z_power sqrt(r lambda)) / (lambda |1 - r|)]^2
 */
inline double required_vmt(PowerQuery const& q)
{
    q.validate();
    double lambda = q.benchmark_rate;
    double r = q.relative_rate;
    double za = normal_quantile(1 - q.alpha / 2);
    double zp = normal_quantile(q.target_power);
    // sqrt(lambda) factors out: t = [(za + zp sqrt(r)) / |1 - r|]^2 / lambda.
    double root = (za + zp * std::sqrt(r)) / std::abs(1 - r);
    double t = root * root / lambda;
    if (q.rounding == EventRounding::FloorExpectedEvents)
        t = std::max(1.0, std::floor(lambda * t)) / lambda;
    return t;
}

//! Power of the same test after \p vmt_millions miles; inverse of required_vmt.
inline double achieved_power(double benchmark_rate, double relative_rate,
                             double vmt_millions, double alpha = 0.05)
{
    PowerQuery q{benchmark_rate, relative_rate, alpha, 0.5};
    q.validate();
    if (!(vmt_millions > 0))
        throw DomainError("VMT must be positive");
    double lambda = benchmark_rate;
    double za = normal_quantile(1 - alpha / 2);
    double z = (std::abs(1 - relative_rate) * lambda * std::sqrt(vmt_millions)
                - za * std::sqrt(lambda))
               / std::sqrt(relative_rate * lambda);
    return normal_cdf(z);
}

//---------------------------------------------------------------------------//
// Tables
//---------------------------------------------------------------------------//

struct PowerRow
{
    std::string label;
    double benchmark_rate = 0;
};

struct PowerCell
{
    std::optional<double> vmt_millions;
    std::string error;
};

struct PowerTable
{
    std::vector<PowerRow> rows;
    std::vector<double> relative_rates;
    double alpha = 0.05;
    double target_power = 0.80;
    EventRounding rounding = EventRounding::Continuous;
    //! cells[row][column]
    std::vector<std::vector<PowerCell>> cells;
};

//! "25%" for 0.25.
inline std::string percent_label(double r)
{
    return format_double(std::round(r * 100.0 * 1e9) / 1e9) + "%";
}

//! Required mileage shown with one decimal, as in the published table.
inline std::string format_power_cell(double vmt_millions)
{
    return format_fixed(vmt_millions, 1);
}

inline PowerTable power_table(std::span<PowerRow const> rows,
                              std::span<double const> relative_rates,
                              double alpha = 0.05, double target_power = 0.80,
                              EventRounding rounding = EventRounding::Continuous)
{
    if (rows.empty() || relative_rates.empty())
        throw DomainError("power table needs at least one rate and one relative rate");
    PowerTable t;
    t.rows.assign(rows.begin(), rows.end());
    t.relative_rates.assign(relative_rates.begin(), relative_rates.end());
    t.alpha = alpha;
    t.target_power = target_power;
    t.rounding = rounding;
    for (auto const& row : rows)
    {
        auto& out = t.cells.emplace_back();
        for (double r : relative_rates)
        {
            PowerCell cell;
            try
            {
                cell.vmt_millions
                    = required_vmt({row.benchmark_rate, r, alpha, target_power, rounding});
            }
            catch (DomainError const& e)
            {
                cell.error = e.what();
            }
            out.push_back(std::move(cell));
        }
    }
    return t;
}

//! Table layout: one row per benchmark, one column per relative rate.
inline std::string power_table_csv(PowerTable const& t)
{
    std::vector<std::string> header{"benchmark", "rate_ipmm"};
    for (double r : t.relative_rates)
        header.push_back(percent_label(r));
    csv::Writer w(header);
    for (std::size_t i = 0; i < t.rows.size(); ++i)
    {
        std::vector<std::string> fields{t.rows[i].label, format_double(t.rows[i].benchmark_rate)};
        for (auto const& cell : t.cells[i])
            fields.push_back(cell.vmt_millions ? format_power_cell(*cell.vmt_millions)
                                               : "");
        w.row(fields);
    }
    return w.str();
}

inline nlohmann::json power_table_json(PowerTable const& t)
{
    nlohmann::json j;
    j["alpha"] = t.alpha;
    j["target_power"] = t.target_power;
    j["rounding"] = t.rounding == EventRounding::Continuous ? "continuous"
                                                            : "floor_expected_events";
    j["relative_rates"] = t.relative_rates;
    j["unit"] = "million_miles";
    auto& rows = j["rows"] = nlohmann::json::array();
    for (std::size_t i = 0; i < t.rows.size(); ++i)
    {
        nlohmann::json row;
        row["label"] = t.rows[i].label;
        row["rate_ipmm"] = t.rows[i].benchmark_rate;
        auto& cells = row["cells"] = nlohmann::json::array();
        for (std::size_t k = 0; k < t.relative_rates.size(); ++k)
        {
            auto const& cell = t.cells[i][k];
            nlohmann::json c{{"relative_rate", t.relative_rates[k]}};
            if (cell.vmt_millions)
            {
                c["vmt_millions"] = *cell.vmt_millions;
                c["display"] = format_power_cell(*cell.vmt_millions);
            }
            else
            {
                c["vmt_millions"] = nullptr;
                c["error"] = cell.error;
            }
            cells.push_back(std::move(c));
        }
        rows.push_back(std::move(row));
    }
    return j;
}

}  // namespace crashbench
