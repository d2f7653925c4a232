#pragma once

// Vehicle-level counts, underreporting adjustment, exposure merging, and
// rates.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "crashbench/filters.hpp"
#include "crashbench/model.hpp"

namespace crashbench
{
//---------------------------------------------------------------------------//
// Counting
//---------------------------------------------------------------------------//

//! Weighted qualifying vehicles of crashes flagged at \p severity, by class.
inline VehicleTally tally_crashed_vehicles(ClassifiedSubset const& classified,
                                           SeverityLevel severity)
{
    VehicleTally t;
    for (auto const& e : classified.entries)
    {
        if (!e.flags.get(severity))
            continue;
        double w = e.crash->sample_weight;
        for (auto const* u : e.units)
        {
            switch (u->body_class)
            {
                case BodyClass::Passenger:
                    t.passenger += w;
                    break;
                case BodyClass::VehicleNFS:
                    t.nfs += w;
                    break;
                case BodyClass::OtherVehicle:
                    t.other += w;
                    break;
                case BodyClass::NonVehicle:
                    break;
            }
        }
    }
    return t;
}

/*!
 * Crashed-vehicle count: each flagged crash contributes its number of
 * qualifying vehicles times its sample weight. Vehicle-level, never
 * crash-level.
 */
inline double count_crashed_vehicles(Subset const& subset, SeverityLevel severity)
{
    return tally_crashed_vehicles(classify_subset(subset), severity).total();
}

//! Crash-level counterpart: weighted number of flagged crashes.
inline double count_crashes(ClassifiedSubset const& classified, SeverityLevel severity)
{
    double n = 0;
    for (auto const& e : classified.entries)
    {
        if (e.flags.get(severity))
            n += e.crash->sample_weight;
    }
    return n;
}

inline double count_crashes(Subset const& subset, SeverityLevel severity)
{
    return count_crashes(classify_subset(subset), severity);
}

//! Weighted vehicles per weighted crash over the whole subset.
inline double crash_vs_vehicle_ratio(double vehicles, double crashes)
{
    if (!(crashes > 0))
        throw UndefinedError("vehicle-to-crash ratio undefined: no crashes");
    return vehicles / crashes;
}

inline double crash_vs_vehicle_ratio(Subset const& subset)
{
    auto classified = classify_subset(subset);
    return crash_vs_vehicle_ratio(
        tally_crashed_vehicles(classified, SeverityLevel::PoliceReported).total(),
        count_crashes(classified, SeverityLevel::PoliceReported));
}

//---------------------------------------------------------------------------//
// Severity counts and adjustment
//---------------------------------------------------------------------------//

//! Police-reported counts split into the three adjustment classes.
struct ClassSplit
{
    double pdo = 0;
    double nonfatal_injury = 0;
    double fatal = 0;

    double police_reported() const { return pdo + nonfatal_injury + fatal; }
    double any_injury_reported() const { return nonfatal_injury + fatal; }
};

/*!
 * Observed crashed-vehicle counts per severity level for one dataset.
 */
class SeverityCounts
{
  public:
    SeverityCounts() = default;

    void set(SeverityLevel level, double count)
    {
        if (level == SeverityLevel::AnyPropertyDamageOrInjury)
            throw DomainError("any_property_damage_or_injury is adjustment-derived");
        if (!(count >= 0) || !std::isfinite(count))
            throw ValidationError("negative or non-finite count for "
                                  + std::string(to_string(level)));
        counts_[level] = count;
    }

    bool has(SeverityLevel level) const { return counts_.count(level) != 0; }

    double at(SeverityLevel level) const
    {
        auto it = counts_.find(level);
        if (it == counts_.end())
            throw ValidationError("no count for " + std::string(to_string(level)));
        return it->second;
    }

    std::map<SeverityLevel, double> const& values() const { return counts_; }

    //! pdo = police_reported - any_injury; nonfatal = any_injury - fatal.
    ClassSplit split() const
    {
        ClassSplit s;
        double pr = at(SeverityLevel::PoliceReported);
        double inj = at(SeverityLevel::AnyInjuryReported);
        double fatal = at(SeverityLevel::Fatal);
        s.pdo = pr - inj;
        s.nonfatal_injury = inj - fatal;
        s.fatal = fatal;
        if (s.pdo < 0 || s.nonfatal_injury < 0)
            throw ValidationError("severity counts are not nested (police-reported >= "
                                  "any-injury >= fatal required)");
        return s;
    }

    SeverityCounts scaled(double k) const
    {
        SeverityCounts out;
        for (auto const& [level, n] : counts_)
            out.set(level, n * k);
        return out;
    }

  private:
    std::map<SeverityLevel, double> counts_;
};

/*!
 * Observed severity counts over a subset; passenger + w * NFS + other for
 * each level.
 */
inline SeverityCounts build_severity_counts(ClassifiedSubset const& classified, double w)
{
    SeverityCounts counts;
    for (auto level : kObservedSeverities)
    {
        auto t = tally_crashed_vehicles(classified, level);
        counts.set(level, effective_passenger_count(t, w) + t.other);
    }
    return counts;
}

/*!
 * Adjusted numerator for AnyPropertyDamageOrInjury or AnyInjuryReported.
 *
 *   any PDI    = pdo * F_pdo + nonfatal * F_inj + fatal
 *   any injury = nonfatal * F_inj + fatal
 *
 * with F = 1 / (1 - underreported fraction). Fatal counts are never
 * inflated.
 */
inline double apply_adjustment(ClassSplit const& split,
                               AdjustmentScheme const& scheme,
                               SeverityLevel target)
{
    scheme.validate();
    if (split.pdo < 0 || split.nonfatal_injury < 0 || split.fatal < 0)
        throw ValidationError("negative class count in adjustment input");
    double injury = split.nonfatal_injury * scheme.nonfatal_injury_factor()
                    + split.fatal * scheme.fatal_factor();
    switch (target)
    {
        case SeverityLevel::AnyPropertyDamageOrInjury:
            return split.pdo * scheme.pdo_factor() + injury;
        case SeverityLevel::AnyInjuryReported:
            return injury;
        default:
            throw DomainError("adjustment applies to any_property_damage_or_injury "
                              "and any_injury_reported only");
    }
}

inline double apply_adjustment(SeverityCounts const& counts,
                               AdjustmentScheme const& scheme,
                               SeverityLevel target)
{
    return apply_adjustment(counts.split(), scheme, target);
}

//---------------------------------------------------------------------------//
// Exposure
//---------------------------------------------------------------------------//

enum class ShareArea
{
    //! Use each cell's own area type (urban or rural).
    Cell,
    //! Always use the state's urban shares.
    Urban
};

/*!
 * Which mileage counts toward a dataset's exposure and how it is scaled to
 * passenger vehicles.
 */
struct MileageRoadRule
{
    std::string name;
    std::set<FunctionalClass> included;
    ShareArea share_area = ShareArea::Cell;
    /*!
     * Jurisdiction-coded sources: only Aggregate cells count and the share
     * is the mean of the OtherArterial and Other urban shares.
     */
    bool aggregate_mean_share = false;
    //! Skip passenger scaling entirely (shares treated as 1).
    bool all_vehicles = false;
    //! Every included class must have a cell in every area present.
    bool require_all_cells = true;

    static MileageRoadRule named(std::string const& name)
    {
        MileageRoadRule r;
        r.name = name;
        std::set<FunctionalClass> all_fc(kAllFunctionalClasses.begin(),
                                         kAllFunctionalClasses.end() - 1);
        auto without = [&](std::initializer_list<FunctionalClass> drop) {
            auto s = all_fc;
            for (auto d : drop)
                s.erase(d);
            return s;
        };
        if (name == "all_roads" || name == "all_roads_urban_share")
        {
            r.included = all_fc;
        }
        else if (name == "exclude_interstate" || name == "exclude_interstate_urban_share")
        {
            r.included = without({FunctionalClass::Interstate});
        }
        else if (name == "exclude_interstate_freeway"
                 || name == "exclude_interstate_freeway_urban_share")
        {
            r.included = without({FunctionalClass::Interstate,
                                  FunctionalClass::OtherFreewaysExpressways});
        }
        else if (name == "state_surface_aggregate")
        {
            r.included = {FunctionalClass::Aggregate};
            r.aggregate_mean_share = true;
            r.share_area = ShareArea::Urban;
            r.require_all_cells = false;
        }
        else if (name == "aggregate_all_vehicles")
        {
            r.included = all_fc;
            r.included.insert(FunctionalClass::Aggregate);
            r.all_vehicles = true;
            r.require_all_cells = false;
        }
        else
        {
            throw SchemaError("unknown mileage road rule '" + name + "'");
        }
        if (name.size() > 12 && name.substr(name.size() - 12) == "_urban_share")
            r.share_area = ShareArea::Urban;
        return r;
    }

    //! Same included classes without passenger scaling.
    MileageRoadRule total_vehicles() const
    {
        auto r = *this;
        r.all_vehicles = true;
        r.aggregate_mean_share = false;
        return r;
    }
};

/*!
 * Passenger-vehicle VMT (million miles) for a region: included cells summed,
 * each scaled by its class group's passenger share.
 */
inline double merge_mileage(std::span<MileageCell const> cells,
                            PassengerShareTable const& shares,
                            Region const& region,
                            MileageRoadRule const& rule,
                            std::optional<int> year = std::nullopt)
{
    std::set<int> years;
    std::set<AreaType> areas;
    std::set<std::pair<FunctionalClass, AreaType>> present;
    std::vector<MileageCell const*> selected;
    for (auto const& c : cells)
    {
        if (c.region != region || (year && c.year != *year))
            continue;
        years.insert(c.year);
        areas.insert(c.area_type);
        present.emplace(c.functional_class, c.area_type);
        if (rule.included.count(c.functional_class))
            selected.push_back(&c);
    }
    if (years.size() > 1)
        throw ValidationError("mileage for region '" + region.name
                              + "' spans several years; select one");
    if (selected.empty())
        throw ValidationError("no mileage cells for region '" + region.name
                              + "' under rule '" + rule.name + "'");
    if (rule.require_all_cells)
    {
        for (auto fc : rule.included)
        {
            if (fc == FunctionalClass::Aggregate)
                continue;
            for (auto area : areas)
            {
                if (!present.count({fc, area}))
                {
                    throw ValidationError("missing mileage cell (" + region.name + ", "
                                          + std::string(to_string(fc)) + ", "
                                          + std::string(to_string(area)) + ")");
                }
            }
        }
    }

    auto state = region.share_state();
    double total = 0;
    for (auto const* c : selected)
    {
        double share = 1.0;
        if (!rule.all_vehicles)
        {
            AreaType area = rule.share_area == ShareArea::Urban ? AreaType::Urban
                                                                : c->area_type;
            if (area == AreaType::All)
                throw ValidationError("cell area 'all' needs an urban-share rule ("
                                      + region.name + ")");
            if (rule.aggregate_mean_share)
            {
                share = 0.5
                        * (shares.at({state, area, ClassGroup::OtherArterial})
                           + shares.at({state, area, ClassGroup::Other}));
            }
            else
            {
                share = shares.at({state, area, class_group(c->functional_class)});
            }
        }
        total += c->vmt_millions * share;
    }
    return total;
}

//---------------------------------------------------------------------------//
// Rates
//---------------------------------------------------------------------------//

struct PoissonInterval
{
    double low = 0;
    double high = 0;
};

/*!
 * Exact (Garwood) two-sided interval for a Poisson mean given an observed
 * count n: [G^-1(n, a/2), G^-1(n + 1, 1 - a/2)] with G the regularized
 * lower incomplete gamma function.
 */
inline PoissonInterval garwood_interval(double n, double confidence = 0.95)
{
    if (!(n >= 0) || std::floor(n) != n)
        throw DomainError("exact Poisson interval needs a non-negative integer count");
    if (!(confidence > 0 && confidence < 1))
        throw DomainError("confidence must lie in (0, 1)");
    double alpha = 1.0 - confidence;
    PoissonInterval ci;
    ci.low = n > 0 ? boost::math::gamma_p_inv(n, alpha / 2) : 0.0;
    ci.high = boost::math::gamma_p_inv(n + 1.0, 1.0 - alpha / 2);
    return ci;
}

struct RateOptions
{
    Region region;
    int year = 0;
    SeverityLevel severity = SeverityLevel::PoliceReported;
    AdjustmentName adjustment = AdjustmentName::Unadjusted;
    //! Attach a 95% exact interval (census, unadjusted, integral counts).
    bool exact_interval = false;
};

/*!
 * Rate in incidents per million miles. The exact interval is attached only
 * when requested and the numerator is a whole, unadjusted count.
 */
inline BenchmarkRate compute_rate(double numerator, double vmt_millions,
                                  RateOptions const& opts = {})
{
    if (!(vmt_millions > 0) || !std::isfinite(vmt_millions))
        throw DomainError("VMT must be positive");
    if (!(numerator >= 0) || !std::isfinite(numerator))
        throw DomainError("numerator must be non-negative");
    BenchmarkRate r;
    r.region = opts.region;
    r.year = opts.year;
    r.severity = opts.severity;
    r.adjustment = opts.adjustment;
    r.numerator = numerator;
    r.vmt_millions = vmt_millions;
    r.rate_ipmm = numerator / vmt_millions;
    if (opts.exact_interval && opts.adjustment == AdjustmentName::Unadjusted
        && std::floor(numerator) == numerator)
    {
        auto ci = garwood_interval(numerator);
        r.ci_low_ipmm = ci.low / vmt_millions;
        r.ci_high_ipmm = ci.high / vmt_millions;
    }
    return r;
}

//! Fraction of police-reported counts that are property-damage-only.
inline double pdo_share(SeverityCounts const& counts)
{
    double pr = counts.at(SeverityLevel::PoliceReported);
    if (!(pr > 0))
        throw UndefinedError("PDO share undefined: no police-reported count");
    return counts.split().pdo / pr;
}

//---------------------------------------------------------------------------//
// Display
//---------------------------------------------------------------------------//

//! Rates are shown per billion miles for fatal crashes, per million otherwise.
inline bool displays_per_billion(SeverityLevel level)
{
    return level == SeverityLevel::Fatal;
}

/*!
 * Display text for a rate in the benchmark table's style: two decimals below
 * 10, three significant figures at or above 10.
 */
inline std::string format_rate(double value)
{
    if (std::abs(value) < 10.0)
    {
        // Values that round up to 10.00 switch to the >= 10 style.
        if (std::abs(std::round(value * 100.0) / 100.0) < 10.0)
            return format_fixed(value, 2);
    }
    int magnitude = static_cast<int>(std::floor(std::log10(std::abs(value))));
    double step = std::pow(10.0, magnitude - 2);
    if (std::abs(std::round(value / step) * step) >= std::pow(10.0, magnitude + 1))
        ++magnitude;
    int decimals = std::max(0, 2 - magnitude);
    return format_fixed(value, decimals);
}

inline std::string format_rate_with_unit(BenchmarkRate const& r)
{
    if (displays_per_billion(r.severity))
        return format_rate(r.rate_ipbm()) + " IPBM";
    return format_rate(r.rate_ipmm) + " IPMM";
}

}  // namespace crashbench
