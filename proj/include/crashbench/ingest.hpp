#pragma once

// Schema-driven adapters from raw source-layout CSV exports to canonical
// records.

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "crashbench/csv.hpp"
#include "crashbench/model.hpp"
#include "crashbench/schema.hpp"

namespace crashbench
{
//! Per-load counters. Every input row lands in exactly one record or one
//! diagnostic.
struct IngestDiagnostics
{
    std::size_t crash_rows = 0;
    std::size_t vehicle_rows = 0;
    std::size_t person_rows = 0;
    //! Rows not turned into records, keyed by reason.
    std::map<std::string, std::size_t> skipped;
    //! Records kept with a fallback classification, keyed by warning.
    std::map<std::string, std::size_t> warnings;
    std::vector<std::string> caveats;

    void skip(std::string const& why) { ++skipped[why]; }
    void warn(std::string const& why) { ++warnings[why]; }

    std::size_t skipped_total() const
    {
        std::size_t n = 0;
        for (auto const& [k, v] : skipped)
            n += v;
        return n;
    }

    void merge(IngestDiagnostics const& other)
    {
        crash_rows += other.crash_rows;
        vehicle_rows += other.vehicle_rows;
        person_rows += other.person_rows;
        for (auto const& [k, v] : other.skipped)
            skipped[k] += v;
        for (auto const& [k, v] : other.warnings)
            warnings[k] += v;
        for (auto const& c : other.caveats)
        {
            if (std::find(caveats.begin(), caveats.end(), c) == caveats.end())
                caveats.push_back(c);
        }
    }
};

struct CrashRecords
{
    std::vector<CrashEvent> crashes;
    std::vector<VehicleInvolvement> vehicles;
    std::vector<PersonOutcome> persons;
    IngestDiagnostics diagnostics;

    //! Deterministic (source, crash_id, unit_id, person_id) ordering.
    void sort()
    {
        std::sort(crashes.begin(), crashes.end(), [](auto const& a, auto const& b) {
            return std::tie(a.source, a.crash_id) < std::tie(b.source, b.crash_id);
        });
        std::sort(vehicles.begin(), vehicles.end(), [](auto const& a, auto const& b) {
            return std::tie(a.crash_id, a.unit_id) < std::tie(b.crash_id, b.unit_id);
        });
        std::sort(persons.begin(), persons.end(), [](auto const& a, auto const& b) {
            return std::tie(a.crash_id, a.unit_id, a.person_id)
                   < std::tie(b.crash_id, b.unit_id, b.person_id);
        });
    }

    //! Append another source's records; crash ids must stay unique.
    void append(CrashRecords other)
    {
        std::set<std::string> ids;
        for (auto const& c : crashes)
            ids.insert(c.crash_id);
        for (auto const& c : other.crashes)
        {
            if (ids.count(c.crash_id))
                throw ValidationError("crash id '" + c.crash_id
                                      + "' appears in more than one source");
        }
        auto move_all = [](auto& dst, auto& src) {
            dst.insert(dst.end(), std::make_move_iterator(src.begin()),
                       std::make_move_iterator(src.end()));
        };
        move_all(crashes, other.crashes);
        move_all(vehicles, other.vehicles);
        move_all(persons, other.persons);
        diagnostics.merge(other.diagnostics);
    }
};

//! Region and year of a load; the raw files carry neither.
struct SourceContext
{
    Region region;
    int year = 0;
};

namespace detail
{
inline std::string key_of(std::vector<std::string> const& row, std::size_t col)
{
    return std::string(trim(row[col]));
}

}  // namespace detail

/*!
 * Parse a crash source's crash, vehicle, and person tables into canonical
 * records. Person rows fold into the crash's maximum KABCO (person-origin
 * sources) and crash airbag flag. Vehicles outside the ADS-comparable
 * subset are still emitted; filtering happens downstream.
 */
inline CrashRecords load_crash_source(SchemaSpec const& spec,
                                      csv::Table const& crash_table,
                                      csv::Table const& vehicle_table,
                                      csv::Table const& person_table,
                                      SourceContext const& ctx)
{
    ctx.region.validate();
    CrashRecords out;
    auto& diag = out.diagnostics;
    diag.caveats = spec.caveats;

    //--- Crash table --------------------------------------------------------
    std::unordered_map<std::string, std::size_t> crash_index;
    std::set<std::string> excluded;
    if (!crash_table.header().empty())
    {
        auto key_col = crash_table.column(spec.crash.key);
        auto include = spec.crash.include.bind(crash_table);
        auto surface = spec.crash.road_surface.bind(crash_table);
        auto highway = spec.crash.road_excluded.bind(crash_table);
        auto tow = spec.crash.tow.bind(crash_table);
        auto airbag = spec.crash.airbag.bind(crash_table);
        std::optional<std::size_t> weight_col;
        if (spec.crash.weight_column)
            weight_col = crash_table.column(*spec.crash.weight_column);
        std::optional<std::size_t> kabco_col;
        if (spec.kabco_origin == KabcoOrigin::Crash)
            kabco_col = crash_table.column(*spec.crash.kabco_column);

        for (auto const& row : crash_table.rows())
        {
            ++diag.crash_rows;
            auto id = detail::key_of(row, key_col);
            if (id.empty())
            {
                diag.skip("crash_missing_key");
                continue;
            }
            if (crash_index.count(id) || excluded.count(id))
                throw ValidationError("duplicate crash key '" + id + "' in "
                                      + crash_table.origin());
            if (!include(row))
            {
                excluded.insert(id);
                diag.skip("crash_excluded_by_row_filter");
                continue;
            }
            CrashEvent c;
            c.crash_id = id;
            c.source = spec.source;
            c.region = ctx.region;
            c.year = ctx.year;
            if (surface(row))
                c.road_class = RoadClass::SurfaceStreet;
            else if (highway(row))
                c.road_class = RoadClass::ExcludedHighway;
            else
            {
                c.road_class = RoadClass::Unknown;
                diag.warn("unknown_road_code");
            }
            if (weight_col)
            {
                auto w = parse_number(row[*weight_col]);
                if (!w || !(*w > 0))
                    throw ValidationError("crash '" + id
                                          + "' has a missing or non-positive weight");
                c.sample_weight = *w;
            }
            if (kabco_col)
            {
                auto level = spec.kabco.lookup(row[*kabco_col]);
                if (!level)
                    diag.warn("unknown_kabco_code");
                c.max_kabco = level.value_or(Kabco::Unknown);
            }
            c.tow_away = tow(row);
            c.airbag_deployed = airbag(row);
            crash_index.emplace(id, out.crashes.size());
            out.crashes.push_back(std::move(c));
        }
    }

    auto resolve = [&](std::string const& id, char const* table,
                       std::string const& origin) -> std::optional<std::size_t> {
        auto it = crash_index.find(id);
        if (it != crash_index.end())
            return it->second;
        if (excluded.count(id))
            return std::nullopt;
        throw ReferentialError(std::string(table) + " row references unknown crash '"
                               + id + "' in " + origin);
    };

    //--- Vehicle table ------------------------------------------------------
    if (!vehicle_table.header().empty())
    {
        auto key_col = vehicle_table.column(spec.vehicle.key);
        auto unit_col = vehicle_table.column(spec.vehicle.unit);
        auto non_vehicle = spec.vehicle.non_vehicle.bind(vehicle_table);
        auto passenger = spec.vehicle.passenger.bind(vehicle_table);
        auto nfs = spec.vehicle.nfs.bind(vehicle_table);
        auto other = spec.vehicle.other.bind(vehicle_table);
        auto in_transport = spec.vehicle.in_transport.bind(vehicle_table);
        auto towed = spec.vehicle.towed.bind(vehicle_table);
        auto airbag = spec.vehicle.airbag.bind(vehicle_table);
        std::set<std::pair<std::string, std::string>> seen;

        for (auto const& row : vehicle_table.rows())
        {
            ++diag.vehicle_rows;
            auto id = detail::key_of(row, key_col);
            auto unit = detail::key_of(row, unit_col);
            if (id.empty() || unit.empty())
            {
                diag.skip("vehicle_missing_key");
                continue;
            }
            if (!resolve(id, "vehicle", vehicle_table.origin()))
            {
                diag.skip("vehicle_of_excluded_crash");
                continue;
            }
            if (!seen.emplace(id, unit).second)
                throw ValidationError("duplicate vehicle '" + id + "/" + unit
                                      + "' in " + vehicle_table.origin());
            VehicleInvolvement v;
            v.crash_id = id;
            v.unit_id = unit;
            if (non_vehicle(row))
                v.body_class = BodyClass::NonVehicle;
            else if (passenger(row))
                v.body_class = BodyClass::Passenger;
            else if (nfs(row))
                v.body_class = BodyClass::VehicleNFS;
            else if (other(row))
                v.body_class = BodyClass::OtherVehicle;
            else
            {
                v.body_class = BodyClass::VehicleNFS;
                diag.warn("unknown_body_code");
            }
            v.in_transport = in_transport(row);
            v.towed = towed(row);
            v.airbag_deployed = airbag(row);
            out.vehicles.push_back(std::move(v));
        }
    }

    //--- Person table -------------------------------------------------------
    std::vector<bool> has_person(out.crashes.size(), false);
    if (!person_table.header().empty())
    {
        auto key_col = person_table.column(spec.person.key);
        auto person_col = person_table.column(spec.person.person);
        std::optional<std::size_t> unit_col;
        if (spec.person.unit)
            unit_col = person_table.column(*spec.person.unit);
        std::optional<std::size_t> kabco_col;
        if (spec.person.kabco_column)
            kabco_col = person_table.column(*spec.person.kabco_column);
        auto airbag = spec.person.airbag.bind(person_table);
        std::set<std::tuple<std::string, std::string, std::string>> seen;

        for (auto const& row : person_table.rows())
        {
            ++diag.person_rows;
            auto id = detail::key_of(row, key_col);
            auto pid = detail::key_of(row, person_col);
            if (id.empty() || pid.empty())
            {
                diag.skip("person_missing_key");
                continue;
            }
            auto idx = resolve(id, "person", person_table.origin());
            if (!idx)
            {
                diag.skip("person_of_excluded_crash");
                continue;
            }
            PersonOutcome p;
            p.crash_id = id;
            p.unit_id = unit_col ? detail::key_of(row, *unit_col) : std::string();
            p.person_id = pid;
            if (!seen.emplace(p.crash_id, p.unit_id, p.person_id).second)
                throw ValidationError("duplicate person '" + id + "/" + p.unit_id
                                      + "/" + pid + "' in " + person_table.origin());
            if (kabco_col)
            {
                auto level = spec.kabco.lookup(row[*kabco_col]);
                if (!level && spec.kabco_origin == KabcoOrigin::Person)
                    diag.warn("unknown_kabco_code");
                p.kabco = level.value_or(Kabco::Unknown);
            }
            p.airbag_deployed = airbag(row);

            auto& crash = out.crashes[*idx];
            if (p.airbag_deployed)
                crash.airbag_deployed = true;
            if (spec.kabco_origin == KabcoOrigin::Person)
            {
                crash.max_kabco = has_person[*idx]
                                      ? more_severe(crash.max_kabco, p.kabco)
                                      : p.kabco;
            }
            has_person[*idx] = true;
            out.persons.push_back(std::move(p));
        }
    }
    if (spec.kabco_origin == KabcoOrigin::Person)
    {
        for (std::size_t i = 0; i < out.crashes.size(); ++i)
        {
            if (!has_person[i])
                diag.warn("crash_without_persons");
        }
    }

    out.sort();
    return out;
}

//! File-path overload. The three files are parsed concurrently.
inline CrashRecords load_crash_source(SchemaSpec const& spec,
                                      std::string const& crash_file,
                                      std::string const& vehicle_file,
                                      std::string const& person_file,
                                      SourceContext const& ctx)
{
    auto read = [](std::string const& path) {
        return path.empty() ? csv::Table{} : csv::read(path);
    };
    auto crash = std::async(std::launch::async, read, crash_file);
    auto vehicle = std::async(std::launch::async, read, vehicle_file);
    auto person = std::async(std::launch::async, read, person_file);
    auto c = crash.get();
    auto v = vehicle.get();
    auto p = person.get();
    return load_crash_source(spec, c, v, p, ctx);
}

//---------------------------------------------------------------------------//
// Mileage
//---------------------------------------------------------------------------//

/*!
 * One MileageCell per included row, VMT normalized to million miles.
 */
inline std::vector<MileageCell> load_mileage(MileageSpec const& spec,
                                             csv::Table const& table,
                                             SourceContext const& ctx,
                                             IngestDiagnostics* diag = nullptr)
{
    ctx.region.validate();
    std::vector<MileageCell> cells;
    if (table.header().empty())
        return cells;
    auto include = spec.include.bind(table);
    auto vmt_col = table.column(spec.vmt_column);
    std::optional<std::size_t> fc_col, area_col, unit_col, year_col;
    if (spec.functional_class.column)
        fc_col = table.column(*spec.functional_class.column);
    if (spec.area_type.column)
        area_col = table.column(*spec.area_type.column);
    if (spec.unit_column)
        unit_col = table.column(*spec.unit_column);
    if (spec.year_column)
        year_col = table.column(*spec.year_column);

    std::set<std::tuple<int, FunctionalClass, AreaType>> seen;
    std::size_t rowno = 0;
    for (auto const& row : table.rows())
    {
        ++rowno;
        auto where = table.origin() + " row " + std::to_string(rowno);
        if (!include(row))
        {
            if (diag)
                diag->skip("mileage_excluded_by_row_filter");
            continue;
        }
        MileageCell cell;
        cell.region = ctx.region;
        cell.year = ctx.year;
        if (year_col)
        {
            auto y = parse_integer(row[*year_col]);
            if (!y)
                throw ValidationError(where + ": malformed year");
            cell.year = static_cast<int>(*y);
        }
        auto fc = spec.functional_class.lookup(fc_col ? row[*fc_col] : "");
        if (!fc)
            throw ValidationError(where + ": unmapped functional class '"
                                  + row[*fc_col] + "'");
        cell.functional_class = *fc;
        auto area = spec.area_type.lookup(area_col ? row[*area_col] : "");
        if (!area)
            throw ValidationError(where + ": unmapped area type '"
                                  + row[*area_col] + "'");
        cell.area_type = *area;

        auto vmt = parse_number(row[vmt_col]);
        if (!vmt)
            throw ValidationError(where + ": VMT '" + row[vmt_col]
                                  + "' is not a number");
        if (*vmt < 0)
            throw ValidationError(where + ": negative VMT");
        auto unit = spec.unit;
        if (unit_col)
        {
            auto u = parse_vmt_unit(row[*unit_col]);
            if (!u)
                throw ValidationError(where + ": unknown VMT unit '"
                                      + row[*unit_col] + "'");
            unit = *u;
        }
        cell.vmt_millions = *vmt / vmt_unit_divisor(unit);

        if (!seen.emplace(cell.year, cell.functional_class, cell.area_type).second)
        {
            throw ValidationError(where + ": duplicate mileage cell ("
                                  + std::string(to_string(cell.functional_class))
                                  + ", " + std::string(to_string(cell.area_type))
                                  + ")");
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

//---------------------------------------------------------------------------//
// Passenger shares
//---------------------------------------------------------------------------//

namespace detail
{
struct ShareValue
{
    double value = 0;
    bool percent_sign = false;
};

inline std::optional<ShareValue> parse_share(std::string_view raw)
{
    auto t = trim(raw);
    ShareValue v;
    if (!t.empty() && t.back() == '%')
    {
        v.percent_sign = true;
        t.remove_suffix(1);
    }
    auto n = parse_number(t);
    if (!n)
        return std::nullopt;
    v.value = *n;
    return v;
}
}  // namespace detail

/*!
 * Passenger share of VMT per (state, area type, class group), summed over
 * the spec's share columns and normalized to a fraction.
 */
inline PassengerShareTable load_passenger_share(ShareSpec const& spec,
                                                csv::Table const& table)
{
    if (table.header().empty())
        throw ValidationError("passenger share table " + table.origin() + " is empty");
    std::optional<std::size_t> state_col, area_col, group_col;
    if (spec.state_field.column)
        state_col = table.column(*spec.state_field.column);
    if (spec.area_type.column)
        area_col = table.column(*spec.area_type.column);
    if (spec.group.column)
        group_col = table.column(*spec.group.column);
    std::vector<std::size_t> share_cols;
    for (auto const& c : spec.share_columns)
        share_cols.push_back(table.column(c));

    struct Raw
    {
        ShareKey key;
        std::vector<detail::ShareValue> parts;
    };
    std::vector<Raw> raws;
    bool any_percent_sign = false;
    double max_value = 0;
    std::size_t rowno = 0;
    for (auto const& row : table.rows())
    {
        ++rowno;
        auto where = table.origin() + " row " + std::to_string(rowno);
        Raw r;
        r.key.state = spec.state_field.constant
                          ? *spec.state_field.constant
                          : std::string(trim(row[*state_col]));
        if (r.key.state.empty())
            throw ValidationError(where + ": blank state");
        for (auto& ch : r.key.state)
            ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        auto area = spec.area_type.lookup(area_col ? row[*area_col] : "");
        if (!area || *area == AreaType::All)
            throw ValidationError(where + ": unmapped area type");
        r.key.area_type = *area;
        auto group = spec.group.lookup(group_col ? row[*group_col] : "");
        if (!group)
            throw ValidationError(where + ": unmapped class group '"
                                  + (group_col ? row[*group_col] : "") + "'");
        r.key.group = *group;
        for (auto col : share_cols)
        {
            auto v = detail::parse_share(row[col]);
            if (!v)
                throw ValidationError(where + ": share '" + row[col]
                                      + "' is not a number");
            any_percent_sign = any_percent_sign || v->percent_sign;
            max_value = std::max(max_value, v->value);
            r.parts.push_back(*v);
        }
        raws.push_back(std::move(r));
    }

    bool percent = spec.format == ShareFormat::Percent
                   || (spec.format == ShareFormat::Auto
                       && (any_percent_sign || max_value > 1.0));
    PassengerShareTable out;
    std::set<std::string> states;
    std::set<std::pair<std::string, AreaType>> state_areas;
    for (auto const& r : raws)
    {
        double total = 0;
        for (auto const& p : r.parts)
        {
            bool as_percent = percent || p.percent_sign;
            if (as_percent && (p.value < 0 || p.value > 100))
                throw ValidationError("passenger share for " + to_string(r.key)
                                      + " outside [0, 100] percent");
            if (!as_percent && (p.value < 0 || p.value > 1))
                throw ValidationError("passenger share for " + to_string(r.key)
                                      + " outside [0, 1]");
            total += as_percent ? p.value / 100.0 : p.value;
        }
        if (out.contains(r.key))
            throw ValidationError("duplicate passenger share for " + to_string(r.key));
        if (total > 1.0 + 1e-12)
            throw ValidationError("passenger share for " + to_string(r.key)
                                  + " sums above 100%");
        out.set(r.key, std::min(total, 1.0));
        state_areas.emplace(r.key.state, r.key.area_type);
    }

    std::string missing;
    for (auto const& [state, area] : state_areas)
    {
        for (auto g : kAllClassGroups)
        {
            ShareKey k{state, area, g};
            if (!out.contains(k))
                missing += (missing.empty() ? "" : ", ") + to_string(k);
        }
    }
    if (!missing.empty())
        throw ValidationError("passenger share table " + table.origin()
                              + " is missing: " + missing);
    return out;
}

}  // namespace crashbench
