#pragma once

// Canonical data model shared by every crashbench module. No I/O and no
// statistics live here.

#include <array>
#include <cmath>
#include <compare>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "crashbench/text.hpp"

namespace crashbench
{
//---------------------------------------------------------------------------//
// Errors
//---------------------------------------------------------------------------//

//! Base for failures caused by inputs (files, specs, arguments).
class InputError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Argument outside the mathematical domain of an operation.
class DomainError : public InputError
{
  public:
    using InputError::InputError;
};

//! Missing column, malformed spec file, unknown key.
class SchemaError : public InputError
{
  public:
    using InputError::InputError;
};

//! Join key that does not resolve to a parent record.
class ReferentialError : public InputError
{
  public:
    using InputError::InputError;
};

//! Value violating a documented invariant (negative VMT, duplicates, ...).
class ValidationError : public InputError
{
  public:
    using InputError::InputError;
};

//! Quantity that is mathematically undefined for the given data.
class UndefinedError : public InputError
{
  public:
    using InputError::InputError;
};

//---------------------------------------------------------------------------//
// Enumerations
//---------------------------------------------------------------------------//

enum class RegionKind
{
    National,
    County
};

enum class SeverityLevel
{
    AnyPropertyDamageOrInjury,
    PoliceReported,
    AnyInjuryReported,
    TowAway,
    AirbagDeployed,
    SuspectedSeriousInjuryPlus,
    Fatal
};

inline constexpr std::array<SeverityLevel, 7> kAllSeverities{
    SeverityLevel::AnyPropertyDamageOrInjury,
    SeverityLevel::PoliceReported,
    SeverityLevel::AnyInjuryReported,
    SeverityLevel::TowAway,
    SeverityLevel::AirbagDeployed,
    SeverityLevel::SuspectedSeriousInjuryPlus,
    SeverityLevel::Fatal};

//! Levels observable directly in police-reported data.
inline constexpr std::array<SeverityLevel, 6> kObservedSeverities{
    SeverityLevel::PoliceReported,
    SeverityLevel::AnyInjuryReported,
    SeverityLevel::TowAway,
    SeverityLevel::AirbagDeployed,
    SeverityLevel::SuspectedSeriousInjuryPlus,
    SeverityLevel::Fatal};

enum class RoadClass
{
    SurfaceStreet,
    ExcludedHighway,
    Unknown
};

enum class BodyClass
{
    Passenger,
    VehicleNFS,
    OtherVehicle,
    NonVehicle
};

//! Maximum police-reported injury level of a crash or person.
enum class Kabco
{
    K,
    A,
    B,
    C,
    O,
    InjuredSeverityUnknown,
    Unknown
};

enum class FunctionalClass
{
    Interstate,
    OtherFreewaysExpressways,
    OtherPrincipalArterial,
    MinorArterial,
    MajorCollector,
    MinorCollector,
    Local,
    Aggregate
};

inline constexpr std::array<FunctionalClass, 8> kAllFunctionalClasses{
    FunctionalClass::Interstate,
    FunctionalClass::OtherFreewaysExpressways,
    FunctionalClass::OtherPrincipalArterial,
    FunctionalClass::MinorArterial,
    FunctionalClass::MajorCollector,
    FunctionalClass::MinorCollector,
    FunctionalClass::Local,
    FunctionalClass::Aggregate};

enum class AreaType
{
    Urban,
    Rural,
    All
};

//! Functional-system grouping used by passenger-share (VM-4 style) tables.
enum class ClassGroup
{
    Interstate,
    OtherArterial,
    Other
};

inline constexpr std::array<ClassGroup, 3> kAllClassGroups{
    ClassGroup::Interstate, ClassGroup::OtherArterial, ClassGroup::Other};

enum class AdjustmentName
{
    Unadjusted,
    Blincoe,
    Blanco
};

//---------------------------------------------------------------------------//
// Enum <-> text
//---------------------------------------------------------------------------//

namespace detail
{
template<class E, std::size_t N>
struct EnumNames
{
    std::array<std::pair<E, std::string_view>, N> entries;

    constexpr std::string_view name(E e) const
    {
        for (auto const& [value, text] : entries)
        {
            if (value == e)
                return text;
        }
        return "?";
    }

    std::optional<E> parse(std::string_view s) const
    {
        for (auto const& [value, text] : entries)
        {
            if (iequals(text, s))
                return value;
        }
        return std::nullopt;
    }
};

inline constexpr EnumNames<RegionKind, 2> kRegionKindNames{
    {{{RegionKind::National, "national"}, {RegionKind::County, "county"}}}};

inline constexpr EnumNames<SeverityLevel, 7> kSeverityNames{{{
    {SeverityLevel::AnyPropertyDamageOrInjury, "any_property_damage_or_injury"},
    {SeverityLevel::PoliceReported, "police_reported"},
    {SeverityLevel::AnyInjuryReported, "any_injury_reported"},
    {SeverityLevel::TowAway, "tow_away"},
    {SeverityLevel::AirbagDeployed, "airbag_deployed"},
    {SeverityLevel::SuspectedSeriousInjuryPlus, "suspected_serious_injury_plus"},
    {SeverityLevel::Fatal, "fatal"},
}}};

inline constexpr EnumNames<RoadClass, 3> kRoadClassNames{{{
    {RoadClass::SurfaceStreet, "surface_street"},
    {RoadClass::ExcludedHighway, "excluded_highway"},
    {RoadClass::Unknown, "unknown"},
}}};

inline constexpr EnumNames<BodyClass, 4> kBodyClassNames{{{
    {BodyClass::Passenger, "passenger"},
    {BodyClass::VehicleNFS, "vehicle_nfs"},
    {BodyClass::OtherVehicle, "other_vehicle"},
    {BodyClass::NonVehicle, "non_vehicle"},
}}};

inline constexpr EnumNames<Kabco, 7> kKabcoNames{{{
    {Kabco::K, "K"},
    {Kabco::A, "A"},
    {Kabco::B, "B"},
    {Kabco::C, "C"},
    {Kabco::O, "O"},
    {Kabco::InjuredSeverityUnknown, "injured_severity_unknown"},
    {Kabco::Unknown, "unknown"},
}}};

inline constexpr EnumNames<FunctionalClass, 8> kFunctionalClassNames{{{
    {FunctionalClass::Interstate, "interstate"},
    {FunctionalClass::OtherFreewaysExpressways, "other_freeways_expressways"},
    {FunctionalClass::OtherPrincipalArterial, "other_principal_arterial"},
    {FunctionalClass::MinorArterial, "minor_arterial"},
    {FunctionalClass::MajorCollector, "major_collector"},
    {FunctionalClass::MinorCollector, "minor_collector"},
    {FunctionalClass::Local, "local"},
    {FunctionalClass::Aggregate, "aggregate"},
}}};

inline constexpr EnumNames<AreaType, 3> kAreaTypeNames{{{
    {AreaType::Urban, "urban"},
    {AreaType::Rural, "rural"},
    {AreaType::All, "all"},
}}};

inline constexpr EnumNames<ClassGroup, 3> kClassGroupNames{{{
    {ClassGroup::Interstate, "interstate"},
    {ClassGroup::OtherArterial, "other_arterial"},
    {ClassGroup::Other, "other"},
}}};

inline constexpr EnumNames<AdjustmentName, 3> kAdjustmentNames{{{
    {AdjustmentName::Unadjusted, "unadjusted"},
    {AdjustmentName::Blincoe, "blincoe"},
    {AdjustmentName::Blanco, "blanco"},
}}};

template<class E, std::size_t N>
E parse_or_throw(EnumNames<E, N> const& names,
                 std::string_view text,
                 std::string_view what)
{
    if (auto v = names.parse(text))
        return *v;
    throw SchemaError("unknown " + std::string(what) + " '"
                      + std::string(text) + "'");
}
}  // namespace detail

inline std::string_view to_string(RegionKind v) { return detail::kRegionKindNames.name(v); }
inline std::string_view to_string(SeverityLevel v) { return detail::kSeverityNames.name(v); }
inline std::string_view to_string(RoadClass v) { return detail::kRoadClassNames.name(v); }
inline std::string_view to_string(BodyClass v) { return detail::kBodyClassNames.name(v); }
inline std::string_view to_string(Kabco v) { return detail::kKabcoNames.name(v); }
inline std::string_view to_string(FunctionalClass v) { return detail::kFunctionalClassNames.name(v); }
inline std::string_view to_string(AreaType v) { return detail::kAreaTypeNames.name(v); }
inline std::string_view to_string(ClassGroup v) { return detail::kClassGroupNames.name(v); }
inline std::string_view to_string(AdjustmentName v) { return detail::kAdjustmentNames.name(v); }

inline RegionKind parse_region_kind(std::string_view s) { return detail::parse_or_throw(detail::kRegionKindNames, s, "region kind"); }
inline SeverityLevel parse_severity(std::string_view s) { return detail::parse_or_throw(detail::kSeverityNames, s, "severity level"); }
inline RoadClass parse_road_class(std::string_view s) { return detail::parse_or_throw(detail::kRoadClassNames, s, "road class"); }
inline BodyClass parse_body_class(std::string_view s) { return detail::parse_or_throw(detail::kBodyClassNames, s, "body class"); }
inline Kabco parse_kabco(std::string_view s) { return detail::parse_or_throw(detail::kKabcoNames, s, "KABCO level"); }
inline FunctionalClass parse_functional_class(std::string_view s) { return detail::parse_or_throw(detail::kFunctionalClassNames, s, "functional class"); }
inline AreaType parse_area_type(std::string_view s) { return detail::parse_or_throw(detail::kAreaTypeNames, s, "area type"); }
inline ClassGroup parse_class_group(std::string_view s) { return detail::parse_or_throw(detail::kClassGroupNames, s, "class group"); }
inline AdjustmentName parse_adjustment_name(std::string_view s) { return detail::parse_or_throw(detail::kAdjustmentNames, s, "adjustment scheme"); }

//! Human-readable label as printed in benchmark tables.
inline std::string_view display_label(SeverityLevel v)
{
    switch (v)
    {
        case SeverityLevel::AnyPropertyDamageOrInjury:
            return "Any Property Damage or Injury";
        case SeverityLevel::PoliceReported:
            return "Police-Reported";
        case SeverityLevel::AnyInjuryReported:
            return "Any-Injury-Reported";
        case SeverityLevel::TowAway:
            return "Tow-Away";
        case SeverityLevel::AirbagDeployed:
            return "Airbag Deployed";
        case SeverityLevel::SuspectedSeriousInjuryPlus:
            return "Suspected Serious Injury+";
        case SeverityLevel::Fatal:
            return "Any Fatality";
    }
    return "?";
}

//! Higher functional-system category used for passenger shares.
constexpr ClassGroup class_group(FunctionalClass fc)
{
    switch (fc)
    {
        case FunctionalClass::Interstate:
            return ClassGroup::Interstate;
        case FunctionalClass::OtherFreewaysExpressways:
        case FunctionalClass::OtherPrincipalArterial:
        case FunctionalClass::MinorArterial:
            return ClassGroup::OtherArterial;
        default:
            return ClassGroup::Other;
    }
}

//---------------------------------------------------------------------------//
// Region
//---------------------------------------------------------------------------//

struct Region
{
    RegionKind kind = RegionKind::National;
    std::string name = "national";
    //! Two-letter state code; empty for the national region.
    std::string state;

    static Region national() { return Region{}; }

    static Region county(std::string name, std::string state)
    {
        Region r{RegionKind::County, std::move(name), std::move(state)};
        r.validate();
        return r;
    }

    void validate() const
    {
        if (kind == RegionKind::County && state.size() != 2)
            throw ValidationError("county region '" + name
                                  + "' needs a two-letter state code");
        if (kind == RegionKind::National && !state.empty())
            throw ValidationError("national region carries no state code");
        if (name.empty())
            throw ValidationError("region name is empty");
    }

    //! Key used to look up passenger shares ("US" for national).
    std::string share_state() const
    {
        return kind == RegionKind::National ? std::string("US") : state;
    }

    auto operator<=>(Region const&) const = default;
};

//---------------------------------------------------------------------------//
// Severity chain
//---------------------------------------------------------------------------//

namespace detail
{
// Position in Fatal ⊂ SSI+ ⊂ AnyInjury ⊂ PoliceReported ⊂ AnyPDI; larger is
// broader. TowAway and AirbagDeployed are not chain members.
constexpr int chain_rank(SeverityLevel s)
{
    switch (s)
    {
        case SeverityLevel::Fatal:
            return 0;
        case SeverityLevel::SuspectedSeriousInjuryPlus:
            return 1;
        case SeverityLevel::AnyInjuryReported:
            return 2;
        case SeverityLevel::PoliceReported:
            return 3;
        case SeverityLevel::AnyPropertyDamageOrInjury:
            return 4;
        default:
            return -1;
    }
}
}  // namespace detail

constexpr bool is_chain_member(SeverityLevel s)
{
    return detail::chain_rank(s) >= 0;
}

/*!
 * Whether every crash classified at \c inner necessarily classifies at
 * \c outer.
 */
inline bool severity_chain_contains(SeverityLevel outer, SeverityLevel inner)
{
    if (!is_chain_member(outer) || !is_chain_member(inner))
    {
        throw DomainError("severity '"
                          + std::string(to_string(is_chain_member(outer) ? inner : outer))
                          + "' is not a member of the nested severity chain");
    }
    return detail::chain_rank(outer) >= detail::chain_rank(inner);
}

//---------------------------------------------------------------------------//
// Records
//---------------------------------------------------------------------------//

struct CrashEvent
{
    std::string crash_id;
    std::string source;
    Region region;
    int year = 0;
    RoadClass road_class = RoadClass::Unknown;
    double sample_weight = 1.0;
    Kabco max_kabco = Kabco::Unknown;
    //! Crash-level tow flag as reported by the crash table.
    bool tow_away = false;
    //! Crash-level airbag flag (crash table or folded from persons).
    bool airbag_deployed = false;

    bool operator==(CrashEvent const&) const = default;
};

struct VehicleInvolvement
{
    std::string crash_id;
    std::string unit_id;
    BodyClass body_class = BodyClass::VehicleNFS;
    bool in_transport = false;
    bool towed = false;
    bool airbag_deployed = false;

    bool operator==(VehicleInvolvement const&) const = default;
};

struct PersonOutcome
{
    std::string crash_id;
    std::string unit_id;
    std::string person_id;
    Kabco kabco = Kabco::Unknown;
    bool airbag_deployed = false;

    bool operator==(PersonOutcome const&) const = default;
};

/*!
 * Sources whose records are a census (sample weight fixed at one). Weighted
 * synthetic populations use the "synthetic-sample" tag instead.
 */
inline bool is_census_source(std::string_view source)
{
    return source == "fars" || source == "adot" || source == "switrs"
           || source == "synthetic";
}

inline void validate(CrashEvent const& c)
{
    if (c.crash_id.empty())
        throw ValidationError("crash with empty crash_id");
    if (!(c.sample_weight > 0) || !std::isfinite(c.sample_weight))
        throw ValidationError("crash '" + c.crash_id
                              + "' has non-positive sample weight");
    if (is_census_source(c.source) && c.sample_weight != 1.0)
        throw ValidationError("census source '" + c.source + "' crash '"
                              + c.crash_id + "' must carry weight 1.0");
    c.region.validate();
}

//! More severe of two KABCO outcomes (K > A > B > C > ISU > O > Unknown).
constexpr Kabco more_severe(Kabco a, Kabco b)
{
    constexpr auto rank = [](Kabco k) {
        switch (k)
        {
            case Kabco::K: return 6;
            case Kabco::A: return 5;
            case Kabco::B: return 4;
            case Kabco::C: return 3;
            case Kabco::InjuredSeverityUnknown: return 2;
            case Kabco::O: return 1;
            case Kabco::Unknown: return 0;
        }
        return 0;
    };
    return rank(a) >= rank(b) ? a : b;
}

//---------------------------------------------------------------------------//
// Exposure
//---------------------------------------------------------------------------//

struct MileageCell
{
    Region region;
    int year = 0;
    FunctionalClass functional_class = FunctionalClass::Aggregate;
    AreaType area_type = AreaType::All;
    //! Million vehicle miles traveled.
    double vmt_millions = 0;

    auto key() const
    {
        return std::tie(region, year, functional_class, area_type);
    }

    bool operator==(MileageCell const&) const = default;
};

struct ShareKey
{
    std::string state;
    AreaType area_type = AreaType::Urban;
    ClassGroup group = ClassGroup::Other;

    auto operator<=>(ShareKey const&) const = default;
};

inline std::string to_string(ShareKey const& k)
{
    return k.state + "/" + std::string(to_string(k.area_type)) + "/"
           + std::string(to_string(k.group));
}

//! Passenger-vehicle fraction of VMT by state, area type, and class group.
class PassengerShareTable
{
  public:
    void set(ShareKey key, double share)
    {
        if (!(share >= 0.0 && share <= 1.0))
            throw ValidationError("passenger share for " + to_string(key)
                                  + " outside [0, 1]");
        entries_[std::move(key)] = share;
    }

    double at(ShareKey const& key) const
    {
        auto it = entries_.find(key);
        if (it == entries_.end())
            throw ValidationError("missing passenger share for "
                                  + to_string(key));
        return it->second;
    }

    bool contains(ShareKey const& key) const
    {
        return entries_.count(key) != 0;
    }

    std::map<ShareKey, double> const& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    //! Table with the same share for every group of the listed states.
    static PassengerShareTable uniform(std::vector<std::string> const& states,
                                       double share)
    {
        PassengerShareTable t;
        for (auto const& s : states)
            for (auto area : {AreaType::Urban, AreaType::Rural})
                for (auto g : kAllClassGroups)
                    t.set({s, area, g}, share);
        return t;
    }

  private:
    std::map<ShareKey, double> entries_;
};

//---------------------------------------------------------------------------//
// Underreporting adjustment
//---------------------------------------------------------------------------//

struct AdjustmentScheme
{
    AdjustmentName name = AdjustmentName::Unadjusted;
    double pdo_underreported = 0;
    double nonfatal_injury_underreported = 0;
    double fatal_underreported = 0;

    static constexpr AdjustmentScheme unadjusted()
    {
        return {AdjustmentName::Unadjusted, 0.0, 0.0, 0.0};
    }
    static constexpr AdjustmentScheme blincoe()
    {
        return {AdjustmentName::Blincoe, 0.597, 0.319, 0.0};
    }
    static constexpr AdjustmentScheme blanco()
    {
        return {AdjustmentName::Blanco, 0.84, 0.319, 0.0};
    }
    static AdjustmentScheme from_name(AdjustmentName n)
    {
        switch (n)
        {
            case AdjustmentName::Blincoe:
                return blincoe();
            case AdjustmentName::Blanco:
                return blanco();
            default:
                return unadjusted();
        }
    }

    static double factor(double underreported)
    {
        return 1.0 / (1.0 - underreported);
    }
    double pdo_factor() const { return factor(pdo_underreported); }
    double nonfatal_injury_factor() const
    {
        return factor(nonfatal_injury_underreported);
    }
    double fatal_factor() const { return factor(fatal_underreported); }

    void validate() const
    {
        auto check = [](double f, char const* what) {
            if (!(f >= 0.0 && f < 1.0))
                throw ValidationError(std::string(what)
                                      + " underreported fraction outside [0, 1)");
        };
        check(pdo_underreported, "PDO");
        check(nonfatal_injury_underreported, "non-fatal injury");
        if (fatal_underreported != 0.0)
            throw ValidationError("fatal crashes are never adjusted");
    }
};

//---------------------------------------------------------------------------//
// Result cell
//---------------------------------------------------------------------------//

struct BenchmarkRate
{
    Region region;
    int year = 0;
    SeverityLevel severity = SeverityLevel::PoliceReported;
    AdjustmentName adjustment = AdjustmentName::Unadjusted;
    double numerator = 0;
    double vmt_millions = 0;
    //! Incidents per million miles.
    double rate_ipmm = 0;
    std::optional<double> ci_low_ipmm;
    std::optional<double> ci_high_ipmm;

    double rate_ipbm() const { return rate_ipmm * 1000.0; }
};

}  // namespace crashbench
