#pragma once

// Selection of the ADS-comparable subset (road type, vehicle type,
// in-transport status), NFS imputation, and severity classification.

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "crashbench/ingest.hpp"
#include "crashbench/model.hpp"

namespace crashbench
{
//---------------------------------------------------------------------------//
// Severity
//---------------------------------------------------------------------------//

/*!
 * Observed severity levels of one crash. AnyPropertyDamageOrInjury is not
 * observable; it only exists as an adjusted count.
 */
struct SeverityFlags
{
    bool police_reported = false;
    bool any_injury_reported = false;
    bool tow_away = false;
    bool airbag_deployed = false;
    bool suspected_serious_injury_plus = false;
    bool fatal = false;

    bool get(SeverityLevel level) const
    {
        switch (level)
        {
            case SeverityLevel::PoliceReported:
                return police_reported;
            case SeverityLevel::AnyInjuryReported:
                return any_injury_reported;
            case SeverityLevel::TowAway:
                return tow_away;
            case SeverityLevel::AirbagDeployed:
                return airbag_deployed;
            case SeverityLevel::SuspectedSeriousInjuryPlus:
                return suspected_serious_injury_plus;
            case SeverityLevel::Fatal:
                return fatal;
            case SeverityLevel::AnyPropertyDamageOrInjury:
                break;
        }
        throw DomainError("any_property_damage_or_injury is adjustment-derived, not observed");
    }

    //! Fatal => SSI+ => any injury => police reported.
    bool chain_consistent() const
    {
        return (!fatal || suspected_serious_injury_plus)
               && (!suspected_serious_injury_plus || any_injury_reported)
               && (!any_injury_reported || police_reported);
    }
};

/*!
 * Classify a crash. Tow-away and airbag flags consider the crash-level
 * flags plus the given units only, so pass the subset-eligible units.
 */
inline SeverityFlags classify_severity(CrashEvent const& crash,
                                       std::span<VehicleInvolvement const* const> units,
                                       bool police_report_source = true)
{
    SeverityFlags f;
    f.police_reported = police_report_source;
    auto k = crash.max_kabco;
    f.any_injury_reported = f.police_reported
                            && (k == Kabco::K || k == Kabco::A || k == Kabco::B
                                || k == Kabco::C || k == Kabco::InjuredSeverityUnknown);
    f.suspected_serious_injury_plus = f.police_reported && (k == Kabco::K || k == Kabco::A);
    f.fatal = f.police_reported && k == Kabco::K;
    f.tow_away = crash.tow_away;
    f.airbag_deployed = crash.airbag_deployed;
    for (auto const* u : units)
    {
        f.tow_away = f.tow_away || u->towed;
        f.airbag_deployed = f.airbag_deployed || u->airbag_deployed;
    }
    return f;
}

//---------------------------------------------------------------------------//
// NFS imputation
//---------------------------------------------------------------------------//

struct ImputationWeight
{
    Region region;
    //! Weighted passenger / (passenger + other known vehicles).
    double w = 1.0;
};

//! Weighted vehicle counts by body class.
struct VehicleTally
{
    double passenger = 0;
    double nfs = 0;
    double other = 0;

    double total() const { return passenger + nfs + other; }
};

/*!
 * Share of classified (non-NFS) vehicles that are passenger vehicles,
 * weighted by crash sample weight. NFS and non-vehicle units are ignored.
 */
inline ImputationWeight compute_imputation_weight(
    std::span<CrashEvent const> crashes,
    std::span<VehicleInvolvement const> vehicles,
    Region const& region)
{
    std::unordered_map<std::string, double> weight;
    for (auto const& c : crashes)
        weight.emplace(c.crash_id, c.sample_weight);
    double passenger = 0;
    double other = 0;
    for (auto const& v : vehicles)
    {
        auto it = weight.find(v.crash_id);
        if (it == weight.end())
            throw ReferentialError("vehicle references unknown crash '" + v.crash_id + "'");
        if (v.body_class == BodyClass::Passenger)
            passenger += it->second;
        else if (v.body_class == BodyClass::OtherVehicle)
            other += it->second;
    }
    if (!(passenger + other > 0))
    {
        throw UndefinedError("imputation weight undefined for region '" + region.name
                             + "': no classified vehicles");
    }
    return {region, passenger / (passenger + other)};
}

//! Passenger count with NFS vehicles imputed at weight w.
inline double effective_passenger_count(VehicleTally const& counts, double w)
{
    if (!(w >= 0.0 && w <= 1.0))
        throw DomainError("imputation weight outside [0, 1]");
    return counts.passenger + w * counts.nfs;
}

//---------------------------------------------------------------------------//
// Subset selection
//---------------------------------------------------------------------------//

struct SubsetRules
{
    bool surface_streets_only = true;
    bool in_transport_only = true;
    std::set<BodyClass> vehicle_classes{BodyClass::Passenger, BodyClass::VehicleNFS};

    static SubsetRules ads_comparable() { return {}; }
    static SubsetRules passenger_all_roads()
    {
        SubsetRules r;
        r.surface_streets_only = false;
        return r;
    }
    //! Every vehicle of every crash, any road ("All Vehicles, Any Type").
    static SubsetRules all_vehicles()
    {
        SubsetRules r;
        r.surface_streets_only = false;
        r.in_transport_only = false;
        r.vehicle_classes = {BodyClass::Passenger, BodyClass::VehicleNFS,
                             BodyClass::OtherVehicle};
        return r;
    }

    std::string describe() const
    {
        std::string s = surface_streets_only ? "surface_streets" : "all_roads";
        s += in_transport_only ? "+in_transport" : "+any_status";
        s += "+classes=";
        bool first = true;
        for (auto c : vehicle_classes)
        {
            s += (first ? "" : "|") + std::string(to_string(c));
            first = false;
        }
        return s;
    }
};

//! Exclusion counters for the filter-audit report.
struct FilterAudit
{
    std::size_t input_crashes = 0;
    std::size_t input_vehicles = 0;
    double input_crashes_weighted = 0;
    std::map<std::string, std::size_t> excluded;
    std::size_t kept_crashes = 0;
    std::size_t kept_vehicles = 0;
};

struct Subset
{
    SubsetRules rules;
    //! Crashes passing the road rule with at least one qualifying vehicle.
    std::vector<CrashEvent> crashes;
    //! Qualifying vehicles of those crashes.
    std::vector<VehicleInvolvement> vehicles;
    /*!
     * Road- and transport-qualified vehicles of any known vehicle class,
     * the population the imputation weight is computed from.
     */
    std::vector<VehicleInvolvement> classified_pool;
    std::vector<CrashEvent> pool_crashes;
    FilterAudit audit;

    ImputationWeight imputation_weight(Region const& region) const
    {
        return compute_imputation_weight(pool_crashes, classified_pool, region);
    }
};

/*!
 * Keep crashes on qualifying roads and their qualifying vehicles. Output is
 * ordered by (crash_id, unit_id) regardless of input order.
 */
inline Subset select_subset(std::span<CrashEvent const> crashes,
                            std::span<VehicleInvolvement const> vehicles,
                            SubsetRules const& rules)
{
    Subset s;
    s.rules = rules;
    s.audit.input_crashes = crashes.size();
    s.audit.input_vehicles = vehicles.size();

    std::unordered_map<std::string, CrashEvent const*> road_ok;
    for (auto const& c : crashes)
    {
        s.audit.input_crashes_weighted += c.sample_weight;
        if (rules.surface_streets_only && c.road_class != RoadClass::SurfaceStreet)
        {
            ++s.audit.excluded[c.road_class == RoadClass::Unknown ? "crash_road_unknown"
                                                                   : "crash_excluded_highway"];
            continue;
        }
        road_ok.emplace(c.crash_id, &c);
    }

    std::set<std::string> with_vehicle;
    std::set<std::string> in_pool;
    for (auto const& v : vehicles)
    {
        auto it = road_ok.find(v.crash_id);
        if (it == road_ok.end())
        {
            ++s.audit.excluded["vehicle_of_excluded_crash"];
            continue;
        }
        if (v.body_class == BodyClass::NonVehicle)
        {
            ++s.audit.excluded["vehicle_non_vehicle"];
            continue;
        }
        if (rules.in_transport_only && !v.in_transport)
        {
            ++s.audit.excluded["vehicle_not_in_transport"];
            continue;
        }
        s.classified_pool.push_back(v);
        in_pool.insert(v.crash_id);
        if (!rules.vehicle_classes.count(v.body_class))
        {
            ++s.audit.excluded["vehicle_class_" + std::string(to_string(v.body_class))];
            continue;
        }
        s.vehicles.push_back(v);
        with_vehicle.insert(v.crash_id);
    }
    for (auto const& [id, c] : road_ok)
    {
        if (with_vehicle.count(id))
            s.crashes.push_back(*c);
        else
            ++s.audit.excluded["crash_without_qualifying_vehicle"];
        if (in_pool.count(id))
            s.pool_crashes.push_back(*c);
    }

    auto by_crash = [](auto const& a, auto const& b) { return a.crash_id < b.crash_id; };
    auto by_unit = [](auto const& a, auto const& b) {
        return std::tie(a.crash_id, a.unit_id) < std::tie(b.crash_id, b.unit_id);
    };
    std::sort(s.crashes.begin(), s.crashes.end(), by_crash);
    std::sort(s.pool_crashes.begin(), s.pool_crashes.end(), by_crash);
    std::sort(s.vehicles.begin(), s.vehicles.end(), by_unit);
    std::sort(s.classified_pool.begin(), s.classified_pool.end(), by_unit);
    s.audit.kept_crashes = s.crashes.size();
    s.audit.kept_vehicles = s.vehicles.size();
    return s;
}

//! Per-crash flags over a subset, with the subset's units grouped by crash.
struct ClassifiedSubset
{
    struct Entry
    {
        CrashEvent const* crash = nullptr;
        std::vector<VehicleInvolvement const*> units;
        SeverityFlags flags;
    };
    std::vector<Entry> entries;
    std::size_t unknown_kabco = 0;
};

inline ClassifiedSubset classify_subset(Subset const& subset)
{
    ClassifiedSubset out;
    std::unordered_map<std::string, std::size_t> index;
    out.entries.reserve(subset.crashes.size());
    for (auto const& c : subset.crashes)
    {
        index.emplace(c.crash_id, out.entries.size());
        out.entries.push_back({&c, {}, {}});
    }
    for (auto const& v : subset.vehicles)
        out.entries[index.at(v.crash_id)].units.push_back(&v);
    for (auto& e : out.entries)
    {
        e.flags = classify_severity(*e.crash, e.units);
        if (e.crash->max_kabco == Kabco::Unknown)
            ++out.unknown_kabco;
    }
    return out;
}

//! Filter-audit JSON for one subset selection.
inline nlohmann::json audit_json(Subset const& subset,
                                 std::optional<ImputationWeight> const& w,
                                 IngestDiagnostics const* ingest = nullptr)
{
    nlohmann::json j;
    j["rules"] = subset.rules.describe();
    j["input"] = {{"crashes", subset.audit.input_crashes},
                  {"vehicles", subset.audit.input_vehicles},
                  {"crashes_weighted", subset.audit.input_crashes_weighted}};
    j["excluded"] = subset.audit.excluded;
    j["kept"] = {{"crashes", subset.audit.kept_crashes},
                 {"vehicles", subset.audit.kept_vehicles}};
    if (w)
        j["imputation_weight"] = w->w;
    else
        j["imputation_weight"] = nullptr;
    j["decisions"] = {
        "tow_away and airbag flags use crash-level flags plus subset-eligible units only",
        "person-level airbag deployments are folded to the crash level",
        "unknown KABCO classifies as non-injury"};
    if (ingest)
    {
        j["ingest"] = {{"crash_rows", ingest->crash_rows},
                       {"vehicle_rows", ingest->vehicle_rows},
                       {"person_rows", ingest->person_rows},
                       {"skipped", ingest->skipped},
                       {"warnings", ingest->warnings}};
        j["caveats"] = ingest->caveats;
    }
    return j;
}

}  // namespace crashbench
