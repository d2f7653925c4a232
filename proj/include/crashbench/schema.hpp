#pragma once

// Schema specs: declarative bindings from raw source layouts to the
// canonical model. Code tables live in shipped spec files under
// data/schemas/, not here.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crashbench/kvfile.hpp"
#include "crashbench/model.hpp"
#include "crashbench/rules.hpp"

namespace crashbench
{
enum class KabcoOrigin
{
    //! A crash-table column carries the crash's maximum severity.
    Crash,
    //! Crash severity is the most severe person outcome.
    Person
};

//! Raw-code table for one KABCO column.
struct KabcoMap
{
    std::map<Kabco, CodeSet> codes;

    //! Canonical level for a raw code, or nullopt when the code is unmapped.
    std::optional<Kabco> lookup(std::string_view raw) const
    {
        if (is_null_field(raw))
            return std::nullopt;
        for (auto const& [level, set] : codes)
        {
            if (set.contains(raw))
                return level;
        }
        return std::nullopt;
    }
};

struct CrashTableSpec
{
    std::string key;
    std::optional<std::string> weight_column;
    Rule include = Rule::always();
    Rule road_surface;
    Rule road_excluded;
    std::optional<std::string> kabco_column;
    Rule tow;
    Rule airbag;
};

struct VehicleTableSpec
{
    std::string key;
    std::string unit;
    Rule non_vehicle;
    Rule passenger;
    Rule nfs;
    Rule other;
    Rule in_transport;
    Rule towed;
    Rule airbag;
};

struct PersonTableSpec
{
    std::string key;
    std::optional<std::string> unit;
    std::string person;
    std::optional<std::string> kabco_column;
    Rule airbag;
};

/*!
 * Declarative adapter for one crash source layout (crash, vehicle, and
 * person tables plus their code tables).
 */
struct SchemaSpec
{
    std::string source;
    std::string description;
    bool census = true;
    KabcoOrigin kabco_origin = KabcoOrigin::Crash;
    KabcoMap kabco;
    CrashTableSpec crash;
    VehicleTableSpec vehicle;
    PersonTableSpec person;
    //! Free-form caveats surfaced in audit reports.
    std::vector<std::string> caveats;

    static SchemaSpec from_kv(KeyValueFile const& kv)
    {
        SchemaSpec s;
        auto rule = [&](std::string const& key) {
            try
            {
                return Rule::parse(kv.require(key));
            }
            catch (SchemaError const& e)
            {
                throw SchemaError(kv.origin() + ": rule '" + key + "': " + e.what());
            }
        };
        auto opt_rule = [&](std::string const& key, Rule fallback) {
            return kv.has(key) ? rule(key) : fallback;
        };
        auto opt = [&](std::string const& key) -> std::optional<std::string> {
            auto v = kv.get(key);
            if (v && v->empty())
                return std::nullopt;
            return v;
        };

        s.source = kv.require("source");
        s.description = kv.get_or("description", "");
        s.census = kv.bool_or("census", true);
        auto origin = to_lower(kv.require("kabco.origin"));
        if (origin == "crash")
            s.kabco_origin = KabcoOrigin::Crash;
        else if (origin == "person")
            s.kabco_origin = KabcoOrigin::Person;
        else
            throw SchemaError(kv.origin() + ": kabco.origin must be crash or person");
        for (auto level : {Kabco::K, Kabco::A, Kabco::B, Kabco::C, Kabco::O,
                           Kabco::InjuredSeverityUnknown})
        {
            auto key = "kabco." + std::string(to_string(level));
            if (level == Kabco::InjuredSeverityUnknown)
            {
                if (kv.has(key))
                    s.kabco.codes[level] = CodeSet::parse(kv.require(key));
                continue;
            }
            s.kabco.codes[level] = CodeSet::parse(kv.require(key));
        }

        s.crash.key = kv.require("crash.key");
        s.crash.weight_column = opt("crash.weight");
        s.crash.include = opt_rule("crash.include", Rule::always());
        s.crash.road_surface = rule("crash.road.surface");
        s.crash.road_excluded = rule("crash.road.excluded");
        s.crash.kabco_column = opt("crash.kabco");
        s.crash.tow = rule("crash.tow");
        s.crash.airbag = rule("crash.airbag");

        s.vehicle.key = kv.require("vehicle.key");
        s.vehicle.unit = kv.require("vehicle.unit");
        s.vehicle.non_vehicle = rule("vehicle.body.non_vehicle");
        s.vehicle.passenger = rule("vehicle.body.passenger");
        s.vehicle.nfs = rule("vehicle.body.nfs");
        s.vehicle.other = rule("vehicle.body.other");
        s.vehicle.in_transport = rule("vehicle.in_transport");
        s.vehicle.towed = rule("vehicle.towed");
        s.vehicle.airbag = rule("vehicle.airbag");

        s.person.key = kv.require("person.key");
        s.person.unit = opt("person.unit");
        s.person.person = kv.require("person.person");
        s.person.kabco_column = opt("person.kabco");
        s.person.airbag = rule("person.airbag");

        for (auto const& k : kv.keys_with_prefix("caveat"))
            s.caveats.push_back(kv.require(k));

        s.validate();
        return s;
    }

    static SchemaSpec read(std::string const& path)
    {
        return from_kv(KeyValueFile::read(path));
    }

    void validate() const
    {
        if (kabco_origin == KabcoOrigin::Crash && !crash.kabco_column)
            throw SchemaError(source + ": kabco.origin = crash needs crash.kabco");
        if (kabco_origin == KabcoOrigin::Person && !person.kabco_column)
            throw SchemaError(source + ": kabco.origin = person needs person.kabco");
        if (census && crash.weight_column)
            throw SchemaError(source + ": census sources carry no weight column");
        // KABCO code tables must not overlap.
        for (auto a = kabco.codes.begin(); a != kabco.codes.end(); ++a)
        {
            for (auto b = std::next(a); b != kabco.codes.end(); ++b)
            {
                if (!a->second.disjoint_from(b->second))
                {
                    throw SchemaError(source + ": KABCO codes for "
                                      + std::string(to_string(a->first)) + " and "
                                      + std::string(to_string(b->first))
                                      + " overlap");
                }
            }
        }
        check_disjoint(vehicle.passenger, vehicle.nfs, "passenger", "nfs");
        check_disjoint(vehicle.passenger, vehicle.other, "passenger", "other");
        check_disjoint(vehicle.nfs, vehicle.other, "nfs", "other");
    }

  private:
    // Single-predicate "in" clauses on the same column must not share codes.
    void check_disjoint(Rule const& a, Rule const& b, char const* an,
                        char const* bn) const
    {
        for (auto const& ca : a.clauses())
        {
            if (ca.size() != 1 || ca.front().op != PredicateOp::In)
                continue;
            for (auto const& cb : b.clauses())
            {
                if (cb.size() != 1 || cb.front().op != PredicateOp::In)
                    continue;
                if (ca.front().column == cb.front().column
                    && !ca.front().codes.disjoint_from(cb.front().codes))
                {
                    throw SchemaError(source + ": " + an + " and " + bn
                                      + " codes overlap on column '"
                                      + ca.front().column + "'");
                }
            }
        }
    }
};

//---------------------------------------------------------------------------//
// Mileage and share layouts
//---------------------------------------------------------------------------//

//! Column, or a constant, mapped through per-value code sets.
template<class E>
struct MappedField
{
    std::optional<std::string> column;
    std::optional<E> constant;
    std::vector<std::pair<E, CodeSet>> map;

    template<class Parse, class Range>
    static MappedField from_kv(KeyValueFile const& kv, std::string const& prefix,
                               Parse parse, Range const& all_values)
    {
        MappedField f;
        if (auto c = kv.get(prefix + ".constant"))
        {
            f.constant = parse(*c);
            return f;
        }
        f.column = kv.require(prefix + ".column");
        for (auto v : all_values)
        {
            auto key = prefix + ".map." + std::string(to_string(v));
            if (kv.has(key))
                f.map.emplace_back(v, CodeSet::parse(kv.require(key)));
        }
        if (f.map.empty())
            throw SchemaError(kv.origin() + ": " + prefix + " needs .constant or .map.* entries");
        return f;
    }

    std::optional<E> lookup(std::string_view raw) const
    {
        if (constant)
            return constant;
        for (auto const& [value, set] : map)
        {
            if (set.contains(raw))
                return value;
        }
        return std::nullopt;
    }
};

enum class VmtUnit
{
    Millions,
    Thousands,
    Miles
};

inline double vmt_unit_divisor(VmtUnit u)
{
    switch (u)
    {
        case VmtUnit::Thousands:
            return 1e3;
        case VmtUnit::Miles:
            return 1e6;
        default:
            return 1.0;
    }
}

inline std::optional<VmtUnit> parse_vmt_unit(std::string_view s)
{
    auto t = to_lower(trim(s));
    if (t == "millions" || t == "million" || t == "mmi" || t == "m")
        return VmtUnit::Millions;
    if (t == "thousands" || t == "thousand" || t == "kmi" || t == "k")
        return VmtUnit::Thousands;
    if (t == "miles" || t == "mi")
        return VmtUnit::Miles;
    return std::nullopt;
}

//! Layout of a VMT table (VM-2, CPM, PRD style).
struct MileageSpec
{
    std::string name;
    Rule include = Rule::always();
    MappedField<FunctionalClass> functional_class;
    MappedField<AreaType> area_type;
    std::string vmt_column;
    VmtUnit unit = VmtUnit::Millions;
    std::optional<std::string> unit_column;
    std::optional<std::string> year_column;

    static MileageSpec from_kv(KeyValueFile const& kv)
    {
        MileageSpec s;
        s.name = kv.require("source");
        if (kv.has("row.include"))
            s.include = Rule::parse(kv.require("row.include"));
        s.functional_class = MappedField<FunctionalClass>::from_kv(
            kv, "functional_class", parse_functional_class, kAllFunctionalClasses);
        s.area_type = MappedField<AreaType>::from_kv(
            kv, "area_type", parse_area_type,
            std::array{AreaType::Urban, AreaType::Rural, AreaType::All});
        s.vmt_column = kv.require("vmt.column");
        auto unit = parse_vmt_unit(kv.get_or("vmt.unit", "millions"));
        if (!unit)
            throw SchemaError(kv.origin() + ": unknown vmt.unit");
        s.unit = *unit;
        if (auto c = kv.get("vmt.unit_column"))
            s.unit_column = *c;
        if (auto c = kv.get("year.column"))
            s.year_column = *c;
        return s;
    }

    static MileageSpec read(std::string const& path)
    {
        return from_kv(KeyValueFile::read(path));
    }
};

enum class ShareFormat
{
    Fraction,
    Percent,
    Auto
};

//! Layout of a passenger-share table (VM-4 style).
struct ShareSpec
{
    std::string name;
    MappedField<std::string> state_field;
    MappedField<AreaType> area_type;
    MappedField<ClassGroup> group;
    //! Columns summed to form the passenger share (cars + light trucks).
    std::vector<std::string> share_columns;
    ShareFormat format = ShareFormat::Auto;

    static ShareSpec from_kv(KeyValueFile const& kv)
    {
        ShareSpec s;
        s.name = kv.require("source");
        if (auto c = kv.get("state.constant"))
            s.state_field.constant = *c;
        else
            s.state_field.column = kv.require("state.column");
        s.area_type = MappedField<AreaType>::from_kv(
            kv, "area_type", parse_area_type,
            std::array{AreaType::Urban, AreaType::Rural});
        s.group = MappedField<ClassGroup>::from_kv(kv, "group", parse_class_group,
                                                   kAllClassGroups);
        s.share_columns = split_trimmed(kv.require("share.columns"), ',');
        if (s.share_columns.empty())
            throw SchemaError(kv.origin() + ": share.columns is empty");
        auto fmt = to_lower(kv.get_or("share.format", "auto"));
        if (fmt == "fraction")
            s.format = ShareFormat::Fraction;
        else if (fmt == "percent")
            s.format = ShareFormat::Percent;
        else if (fmt == "auto")
            s.format = ShareFormat::Auto;
        else
            throw SchemaError(kv.origin() + ": share.format must be fraction, percent or auto");
        return s;
    }

    static ShareSpec read(std::string const& path)
    {
        return from_kv(KeyValueFile::read(path));
    }
};

}  // namespace crashbench
