#pragma once

/*
 * Benchmark tables: per-region quantities (mileage and crashed-vehicle
 * counts) turned into adjusted counts and rates in the layout of the
 * published benchmark table.
 *
 * Aggregate input CSV (one quantity per row):
 *
 *   region,state,year,quantity,value
 *   national,,2022,police_reported,8768951
 *
 * Quantities: mileage_all_mmi, crashes, all_vehicles,
 * passenger_all_roads_mmi, passenger_all_roads, surface_passenger_mmi,
 * police_reported, any_injury_reported, tow_away, airbag_deployed,
 * suspected_serious_injury_plus, fatal, and census (1 when counts come from
 * an unweighted census source).
 */

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "crashbench/csv.hpp"
#include "crashbench/filters.hpp"
#include "crashbench/model.hpp"
#include "crashbench/rates.hpp"

namespace crashbench
{
inline std::set<std::string> const kBenchmarkQuantities{
    "mileage_all_mmi",         "crashes",
    "all_vehicles",            "passenger_all_roads_mmi",
    "passenger_all_roads",     "surface_passenger_mmi",
    "police_reported",         "any_injury_reported",
    "tow_away",                "airbag_deployed",
    "suspected_serious_injury_plus", "fatal",
    "census"};

struct RegionInputs
{
    Region region;
    int year = 0;
    std::map<std::string, double> quantities;
    bool census = false;
    std::optional<double> imputation_weight;
    //! Crash-level police-reported and any-injury counts, when known.
    std::optional<double> crash_level_police_reported;
    std::optional<double> crash_level_any_injury;

    std::optional<double> get(std::string const& q) const
    {
        auto it = quantities.find(q);
        if (it == quantities.end())
            return std::nullopt;
        return it->second;
    }
};

enum class RowKind
{
    Mileage,
    Count,
    Rate
};

struct RowDef
{
    std::string id;
    std::string label;
    RowKind kind;
    //! Quantity read directly, or empty for adjusted rows.
    std::string quantity;
    std::string mileage;
    SeverityLevel severity = SeverityLevel::PoliceReported;
    AdjustmentName adjustment = AdjustmentName::Unadjusted;
};

inline std::vector<RowDef> const& benchmark_rows()
{
    using S = SeverityLevel;
    using A = AdjustmentName;
    static std::vector<RowDef> const rows{
        {"mileage_all", "All police-reported mileage (Mmi)", RowKind::Mileage,
         "mileage_all_mmi", "", S::PoliceReported, A::Unadjusted},
        {"crashes", "Crashes", RowKind::Count, "crashes", "", S::PoliceReported,
         A::Unadjusted},
        {"all_vehicles", "All vehicles, any type", RowKind::Rate, "all_vehicles",
         "mileage_all_mmi", S::PoliceReported, A::Unadjusted},
        {"mileage_passenger_all_roads", "Passenger vehicle mileage, all roads (Mmi)",
         RowKind::Mileage, "passenger_all_roads_mmi", "", S::PoliceReported, A::Unadjusted},
        {"passenger_all_roads", "Passenger vehicles, all roads, police-reported",
         RowKind::Rate, "passenger_all_roads", "passenger_all_roads_mmi",
         S::PoliceReported, A::Unadjusted},
        {"mileage_surface", "Passenger vehicle mileage, surface streets (Mmi)",
         RowKind::Mileage, "surface_passenger_mmi", "", S::PoliceReported, A::Unadjusted},
        {"blincoe_any_pdi", "Blincoe-adjusted any property damage or injury",
         RowKind::Rate, "", "surface_passenger_mmi", S::AnyPropertyDamageOrInjury,
         A::Blincoe},
        {"blanco_any_pdi", "Blanco-adjusted any property damage or injury", RowKind::Rate,
         "", "surface_passenger_mmi", S::AnyPropertyDamageOrInjury, A::Blanco},
        {"police_reported", "Police-reported", RowKind::Rate, "police_reported",
         "surface_passenger_mmi", S::PoliceReported, A::Unadjusted},
        {"any_injury_reported", "Any-injury-reported", RowKind::Rate,
         "any_injury_reported", "surface_passenger_mmi", S::AnyInjuryReported,
         A::Unadjusted},
        {"blincoe_any_injury", "Blincoe-adjusted any-injury-reported", RowKind::Rate, "",
         "surface_passenger_mmi", S::AnyInjuryReported, A::Blincoe},
        {"tow_away", "Tow-away", RowKind::Rate, "tow_away", "surface_passenger_mmi",
         S::TowAway, A::Unadjusted},
        {"airbag_deployed", "Airbag deployment", RowKind::Rate, "airbag_deployed",
         "surface_passenger_mmi", S::AirbagDeployed, A::Unadjusted},
        {"suspected_serious_injury_plus", "Suspected serious injury+", RowKind::Rate,
         "suspected_serious_injury_plus", "surface_passenger_mmi",
         S::SuspectedSeriousInjuryPlus, A::Unadjusted},
        {"fatal", "Fatal", RowKind::Rate, "fatal", "surface_passenger_mmi", S::Fatal,
         A::Unadjusted},
    };
    return rows;
}

struct BenchmarkCell
{
    std::optional<double> value;
    std::optional<BenchmarkRate> rate;
    std::string note;

    std::string display() const
    {
        if (!value)
            return "";
        std::string s = format_grouped(std::round(*value));
        if (rate)
        {
            double shown = displays_per_billion(rate->severity) ? rate->rate_ipbm()
                                                                : rate->rate_ipmm;
            s += " (" + format_rate(shown) + ")";
        }
        return s;
    }
};

struct RegionDiagnostics
{
    std::optional<double> pdo_share_vehicle;
    std::optional<double> pdo_share_crash;
    std::optional<double> vehicle_to_crash_ratio;
    std::optional<double> imputation_weight;
};

struct BenchmarkReport
{
    std::vector<RegionInputs> regions;
    std::vector<RowDef> rows;
    //! cells[row][region]
    std::vector<std::vector<BenchmarkCell>> cells;
    std::vector<RegionDiagnostics> diagnostics;

    BenchmarkCell const& cell(std::string const& row_id, Region const& region) const
    {
        for (std::size_t i = 0; i < rows.size(); ++i)
        {
            if (rows[i].id != row_id)
                continue;
            for (std::size_t k = 0; k < regions.size(); ++k)
            {
                if (regions[k].region == region)
                    return cells[i][k];
            }
        }
        throw ValidationError("no benchmark cell (" + row_id + ", " + region.name + ")");
    }
};

struct BenchmarkOptions
{
    //! Row ids to emit; empty emits all rows.
    std::vector<std::string> rows;
    bool exact_intervals = true;
};

namespace detail
{
inline std::optional<double> adjusted_numerator(RegionInputs const& in, RowDef const& row)
{
    auto pr = in.get("police_reported");
    auto inj = in.get("any_injury_reported");
    auto fatal = in.get("fatal");
    if (!pr || !inj || !fatal)
        return std::nullopt;
    SeverityCounts counts;
    counts.set(SeverityLevel::PoliceReported, *pr);
    counts.set(SeverityLevel::AnyInjuryReported, *inj);
    counts.set(SeverityLevel::Fatal, *fatal);
    return apply_adjustment(counts, AdjustmentScheme::from_name(row.adjustment),
                            row.severity);
}
}  // namespace detail

inline BenchmarkReport compute_benchmark(std::vector<RegionInputs> const& inputs,
                                         BenchmarkOptions const& opts = {})
{
    BenchmarkReport report;
    report.regions = inputs;
    for (auto const& row : benchmark_rows())
    {
        if (opts.rows.empty()
            || std::find(opts.rows.begin(), opts.rows.end(), row.id) != opts.rows.end())
        {
            report.rows.push_back(row);
        }
    }
    for (auto const& id : opts.rows)
    {
        auto const& all = benchmark_rows();
        if (std::none_of(all.begin(), all.end(), [&](RowDef const& r) { return r.id == id; }))
            throw SchemaError("unknown benchmark row '" + id + "'");
    }

    for (auto const& row : report.rows)
    {
        auto& out = report.cells.emplace_back();
        for (auto const& in : inputs)
        {
            BenchmarkCell cell;
            cell.value = row.quantity.empty() ? detail::adjusted_numerator(in, row)
                                              : in.get(row.quantity);
            if (!cell.value)
                cell.note = "not available";
            if (cell.value && row.kind == RowKind::Rate)
            {
                auto vmt = in.get(row.mileage);
                if (vmt && *vmt > 0)
                {
                    RateOptions ro;
                    ro.region = in.region;
                    ro.year = in.year;
                    ro.severity = row.severity;
                    ro.adjustment = row.adjustment;
                    ro.exact_interval = opts.exact_intervals && in.census;
                    cell.rate = compute_rate(*cell.value, *vmt, ro);
                }
                else
                {
                    cell.note = "no mileage";
                }
            }
            out.push_back(std::move(cell));
        }
    }

    for (auto const& in : inputs)
    {
        RegionDiagnostics d;
        d.imputation_weight = in.imputation_weight;
        auto pr = in.get("police_reported");
        auto inj = in.get("any_injury_reported");
        if (pr && inj && *pr > 0)
            d.pdo_share_vehicle = (*pr - *inj) / *pr;
        if (in.crash_level_police_reported && in.crash_level_any_injury
            && *in.crash_level_police_reported > 0)
        {
            d.pdo_share_crash = (*in.crash_level_police_reported - *in.crash_level_any_injury)
                                / *in.crash_level_police_reported;
        }
        auto veh = in.get("all_vehicles");
        auto crashes = in.get("crashes");
        if (veh && crashes && *crashes > 0)
            d.vehicle_to_crash_ratio = *veh / *crashes;
        report.diagnostics.push_back(d);
    }
    return report;
}

//---------------------------------------------------------------------------//
// Input
//---------------------------------------------------------------------------//

inline Region region_from_columns(std::string const& name, std::string const& state)
{
    if (state.empty())
    {
        Region r;
        r.name = name.empty() ? "national" : name;
        r.validate();
        return r;
    }
    return Region::county(name, state);
}

inline std::vector<RegionInputs> read_aggregate_inputs(csv::Table const& t,
                                                       std::optional<int> year = {})
{
    auto c_region = t.column("region");
    auto c_state = t.column("state");
    auto c_year = t.column("year");
    auto c_quantity = t.column("quantity");
    auto c_value = t.column("value");
    std::vector<RegionInputs> out;
    for (auto const& r : t.rows())
    {
        auto y = parse_integer(r[c_year]);
        if (!y)
            throw ValidationError("malformed year '" + r[c_year] + "' in " + t.origin());
        if (year && *y != *year)
            continue;
        auto region = region_from_columns(std::string(trim(r[c_region])),
                                          std::string(trim(r[c_state])));
        auto q = std::string(trim(r[c_quantity]));
        if (!kBenchmarkQuantities.count(q))
            throw SchemaError("unknown quantity '" + q + "' in " + t.origin());
        auto v = parse_number(r[c_value]);
        if (!v || *v < 0)
            throw ValidationError("malformed or negative value for " + q + " in "
                                  + t.origin());
        auto it = std::find_if(out.begin(), out.end(), [&](RegionInputs const& x) {
            return x.region == region && x.year == *y;
        });
        if (it == out.end())
        {
            out.push_back({region, static_cast<int>(*y), {}, false, {}, {}, {}});
            it = out.end() - 1;
        }
        if (q == "census")
        {
            it->census = *v != 0;
            continue;
        }
        if (!it->quantities.emplace(q, *v).second)
            throw ValidationError("duplicate quantity " + q + " for " + region.name);
    }
    return out;
}

struct RecordBenchmarkConfig
{
    Region region;
    int year = 0;
    //! Mileage rule for the surface-street passenger exposure.
    std::string road_rule = "exclude_interstate";
};

/*!
 * Region quantities computed from canonical records, mileage cells, and
 * passenger shares.
 */
inline RegionInputs region_inputs_from_records(CrashRecords const& records,
                                               std::span<MileageCell const> mileage,
                                               PassengerShareTable const& shares,
                                               RecordBenchmarkConfig const& cfg)
{
    std::vector<CrashEvent> crashes;
    std::set<std::string> ids;
    for (auto const& c : records.crashes)
    {
        if (c.region == cfg.region && c.year == cfg.year)
        {
            crashes.push_back(c);
            ids.insert(c.crash_id);
        }
    }
    std::vector<VehicleInvolvement> vehicles;
    for (auto const& v : records.vehicles)
    {
        if (ids.count(v.crash_id))
            vehicles.push_back(v);
    }

    RegionInputs in;
    in.region = cfg.region;
    in.year = cfg.year;
    in.census = !crashes.empty()
                && std::all_of(crashes.begin(), crashes.end(),
                               [](CrashEvent const& c) { return is_census_source(c.source); });

    auto all = select_subset(crashes, vehicles, SubsetRules::all_vehicles());
    auto all_c = classify_subset(all);
    in.quantities["crashes"] = count_crashes(all_c, SeverityLevel::PoliceReported);
    in.quantities["all_vehicles"]
        = tally_crashed_vehicles(all_c, SeverityLevel::PoliceReported).total();

    auto passenger = select_subset(crashes, vehicles, SubsetRules::passenger_all_roads());
    if (!passenger.crashes.empty())
    {
        double w = passenger.imputation_weight(cfg.region).w;
        auto t = tally_crashed_vehicles(classify_subset(passenger),
                                        SeverityLevel::PoliceReported);
        in.quantities["passenger_all_roads"] = effective_passenger_count(t, w);
    }

    auto surface = select_subset(crashes, vehicles, SubsetRules::ads_comparable());
    if (!surface.crashes.empty())
    {
        double w = surface.imputation_weight(cfg.region).w;
        in.imputation_weight = w;
        auto classified = classify_subset(surface);
        auto counts = build_severity_counts(classified, w);
        for (auto const& [level, n] : counts.values())
            in.quantities[std::string(to_string(level))] = n;
        in.crash_level_police_reported = count_crashes(classified, SeverityLevel::PoliceReported);
        in.crash_level_any_injury = count_crashes(classified, SeverityLevel::AnyInjuryReported);
    }

    if (!mileage.empty())
    {
        auto rule = MileageRoadRule::named(cfg.road_rule);
        auto all_roads = MileageRoadRule::named(rule.share_area == ShareArea::Urban
                                                    ? "all_roads_urban_share"
                                                    : "all_roads");
        if (rule.aggregate_mean_share)
            all_roads = MileageRoadRule::named("aggregate_all_vehicles");
        in.quantities["mileage_all_mmi"] = merge_mileage(
            mileage, shares, cfg.region, all_roads.total_vehicles(), cfg.year);
        if (!rule.aggregate_mean_share)
        {
            in.quantities["passenger_all_roads_mmi"]
                = merge_mileage(mileage, shares, cfg.region, all_roads, cfg.year);
        }
        in.quantities["surface_passenger_mmi"]
            = merge_mileage(mileage, shares, cfg.region, rule, cfg.year);
    }
    return in;
}

//---------------------------------------------------------------------------//
// Output
//---------------------------------------------------------------------------//

//! Published layout: one row per benchmark row, one display column per region.
inline std::string benchmark_table_csv(BenchmarkReport const& r)
{
    std::vector<std::string> header{"row", "label"};
    for (auto const& in : r.regions)
        header.push_back(in.region.name);
    csv::Writer w(header);
    for (std::size_t i = 0; i < r.rows.size(); ++i)
    {
        std::vector<std::string> fields{r.rows[i].id, r.rows[i].label};
        for (auto const& cell : r.cells[i])
            fields.push_back(cell.display());
        w.row(fields);
    }
    return w.str();
}

//! One line per (row, region) with full-precision values.
inline std::string benchmark_long_csv(BenchmarkReport const& r)
{
    csv::Writer w({"row", "region", "state", "year", "severity", "adjustment", "value",
                   "vmt_millions", "rate_ipmm", "rate_display", "rate_unit", "ci_low_ipmm",
                   "ci_high_ipmm"});
    auto opt = [](std::optional<double> const& v) { return v ? format_double(*v) : ""; };
    for (std::size_t i = 0; i < r.rows.size(); ++i)
    {
        auto const& row = r.rows[i];
        for (std::size_t k = 0; k < r.regions.size(); ++k)
        {
            auto const& cell = r.cells[i][k];
            auto const& in = r.regions[k];
            std::string sev, adj, vmt, rate, display, unit, lo, hi;
            if (row.kind == RowKind::Rate)
            {
                sev = to_string(row.severity);
                adj = to_string(row.adjustment);
            }
            if (cell.rate)
            {
                bool bn = displays_per_billion(row.severity);
                vmt = format_double(cell.rate->vmt_millions);
                rate = format_double(cell.rate->rate_ipmm);
                display = format_rate(bn ? cell.rate->rate_ipbm() : cell.rate->rate_ipmm);
                unit = bn ? "IPBM" : "IPMM";
                lo = opt(cell.rate->ci_low_ipmm);
                hi = opt(cell.rate->ci_high_ipmm);
            }
            w.row({row.id, in.region.name, in.region.state, std::to_string(in.year), sev,
                   adj, opt(cell.value), vmt, rate, display, unit, lo, hi});
        }
    }
    return w.str();
}

inline nlohmann::json benchmark_json(BenchmarkReport const& r)
{
    nlohmann::json j;
    auto& regions = j["regions"] = nlohmann::json::array();
    for (std::size_t k = 0; k < r.regions.size(); ++k)
    {
        auto const& in = r.regions[k];
        auto const& d = r.diagnostics[k];
        auto opt = [](std::optional<double> const& v) -> nlohmann::json {
            return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        };
        regions.push_back({{"name", in.region.name},
                           {"state", in.region.state},
                           {"kind", to_string(in.region.kind)},
                           {"year", in.year},
                           {"census", in.census},
                           {"diagnostics",
                            {{"pdo_share_vehicle_level", opt(d.pdo_share_vehicle)},
                             {"pdo_share_crash_level", opt(d.pdo_share_crash)},
                             {"vehicle_to_crash_ratio", opt(d.vehicle_to_crash_ratio)},
                             {"imputation_weight", opt(d.imputation_weight)}}}});
    }
    auto& rows = j["rows"] = nlohmann::json::array();
    for (std::size_t i = 0; i < r.rows.size(); ++i)
    {
        auto const& row = r.rows[i];
        nlohmann::json jr{{"id", row.id}, {"label", row.label}};
        if (row.kind == RowKind::Rate)
        {
            jr["severity"] = to_string(row.severity);
            jr["adjustment"] = to_string(row.adjustment);
        }
        auto& cells = jr["cells"] = nlohmann::json::array();
        for (std::size_t k = 0; k < r.regions.size(); ++k)
        {
            auto const& cell = r.cells[i][k];
            nlohmann::json c{{"region", r.regions[k].region.name}};
            c["value"] = cell.value ? nlohmann::json(*cell.value) : nlohmann::json(nullptr);
            c["display"] = cell.display();
            if (cell.rate)
            {
                c["vmt_millions"] = cell.rate->vmt_millions;
                c["rate_ipmm"] = cell.rate->rate_ipmm;
                if (cell.rate->ci_low_ipmm)
                {
                    c["ci_low_ipmm"] = *cell.rate->ci_low_ipmm;
                    c["ci_high_ipmm"] = *cell.rate->ci_high_ipmm;
                }
            }
            if (!cell.note.empty())
                c["note"] = cell.note;
            cells.push_back(std::move(c));
        }
        rows.push_back(std::move(jr));
    }
    return j;
}

}  // namespace crashbench
