#pragma once

/*
 * Canonical record interchange: one CSV per table with a fixed header,
 * plus a JSON manifest naming the files.
 *
 *   crashes.csv   crash_id,source,region_kind,region_name,region_state,year,
 *                 road_class,sample_weight,max_kabco,tow_away,airbag_deployed
 *   vehicles.csv  crash_id,unit_id,body_class,in_transport,towed,airbag_deployed
 *   persons.csv   crash_id,unit_id,person_id,kabco,airbag_deployed
 *   mileage.csv   region_kind,region_name,region_state,year,functional_class,
 *                 area_type,vmt_millions
 *
 * Booleans are 0/1. Reals use the shortest text that round-trips.
 */

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "crashbench/csv.hpp"
#include "crashbench/ingest.hpp"
#include "crashbench/model.hpp"

namespace crashbench::canonical
{
inline std::vector<std::string> const kCrashHeader{
    "crash_id", "source", "region_kind", "region_name", "region_state", "year",
    "road_class", "sample_weight", "max_kabco", "tow_away", "airbag_deployed"};
inline std::vector<std::string> const kVehicleHeader{
    "crash_id", "unit_id", "body_class", "in_transport", "towed", "airbag_deployed"};
inline std::vector<std::string> const kPersonHeader{
    "crash_id", "unit_id", "person_id", "kabco", "airbag_deployed"};
inline std::vector<std::string> const kMileageHeader{
    "region_kind", "region_name", "region_state", "year", "functional_class",
    "area_type", "vmt_millions"};

namespace detail
{
inline std::string flag(bool b) { return b ? "1" : "0"; }

inline bool parse_flag(std::string const& s, std::string const& what)
{
    if (s == "1")
        return true;
    if (s == "0")
        return false;
    throw ValidationError("malformed boolean '" + s + "' in " + what);
}

inline void require_header(csv::Table const& t,
                           std::vector<std::string> const& expected)
{
    if (t.header() != expected)
        throw SchemaError("unexpected canonical header in " + t.origin());
}

inline int parse_year(std::string const& s, std::string const& what)
{
    auto y = parse_integer(s);
    if (!y)
        throw ValidationError("malformed year '" + s + "' in " + what);
    return static_cast<int>(*y);
}
}  // namespace detail

inline std::string write_crashes(std::vector<CrashEvent> const& crashes)
{
    csv::Writer w(kCrashHeader);
    for (auto const& c : crashes)
    {
        w.row({c.crash_id, c.source, std::string(to_string(c.region.kind)),
               c.region.name, c.region.state, std::to_string(c.year),
               std::string(to_string(c.road_class)), format_double(c.sample_weight),
               std::string(to_string(c.max_kabco)), detail::flag(c.tow_away),
               detail::flag(c.airbag_deployed)});
    }
    return w.str();
}

inline std::string write_vehicles(std::vector<VehicleInvolvement> const& vehicles)
{
    csv::Writer w(kVehicleHeader);
    for (auto const& v : vehicles)
    {
        w.row({v.crash_id, v.unit_id, std::string(to_string(v.body_class)),
               detail::flag(v.in_transport), detail::flag(v.towed),
               detail::flag(v.airbag_deployed)});
    }
    return w.str();
}

inline std::string write_persons(std::vector<PersonOutcome> const& persons)
{
    csv::Writer w(kPersonHeader);
    for (auto const& p : persons)
    {
        w.row({p.crash_id, p.unit_id, p.person_id, std::string(to_string(p.kabco)),
               detail::flag(p.airbag_deployed)});
    }
    return w.str();
}

inline std::string write_mileage(std::vector<MileageCell> const& cells)
{
    csv::Writer w(kMileageHeader);
    for (auto const& m : cells)
    {
        w.row({std::string(to_string(m.region.kind)), m.region.name, m.region.state,
               std::to_string(m.year), std::string(to_string(m.functional_class)),
               std::string(to_string(m.area_type)), format_double(m.vmt_millions)});
    }
    return w.str();
}

inline std::vector<CrashEvent> read_crashes(csv::Table const& t)
{
    detail::require_header(t, kCrashHeader);
    std::vector<CrashEvent> out;
    for (auto const& r : t.rows())
    {
        CrashEvent c;
        c.crash_id = r[0];
        c.source = r[1];
        c.region.kind = parse_region_kind(r[2]);
        c.region.name = r[3];
        c.region.state = r[4];
        c.year = detail::parse_year(r[5], t.origin());
        c.road_class = parse_road_class(r[6]);
        auto w = parse_number(r[7]);
        if (!w)
            throw ValidationError("malformed sample weight in " + t.origin());
        c.sample_weight = *w;
        c.max_kabco = parse_kabco(r[8]);
        c.tow_away = detail::parse_flag(r[9], t.origin());
        c.airbag_deployed = detail::parse_flag(r[10], t.origin());
        validate(c);
        out.push_back(std::move(c));
    }
    return out;
}

inline std::vector<VehicleInvolvement> read_vehicles(csv::Table const& t)
{
    detail::require_header(t, kVehicleHeader);
    std::vector<VehicleInvolvement> out;
    for (auto const& r : t.rows())
    {
        VehicleInvolvement v;
        v.crash_id = r[0];
        v.unit_id = r[1];
        v.body_class = parse_body_class(r[2]);
        v.in_transport = detail::parse_flag(r[3], t.origin());
        v.towed = detail::parse_flag(r[4], t.origin());
        v.airbag_deployed = detail::parse_flag(r[5], t.origin());
        out.push_back(std::move(v));
    }
    return out;
}

inline std::vector<PersonOutcome> read_persons(csv::Table const& t)
{
    detail::require_header(t, kPersonHeader);
    std::vector<PersonOutcome> out;
    for (auto const& r : t.rows())
    {
        PersonOutcome p;
        p.crash_id = r[0];
        p.unit_id = r[1];
        p.person_id = r[2];
        p.kabco = parse_kabco(r[3]);
        p.airbag_deployed = detail::parse_flag(r[4], t.origin());
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<MileageCell> read_mileage(csv::Table const& t)
{
    detail::require_header(t, kMileageHeader);
    std::vector<MileageCell> out;
    for (auto const& r : t.rows())
    {
        MileageCell m;
        m.region.kind = parse_region_kind(r[0]);
        m.region.name = r[1];
        m.region.state = r[2];
        m.region.validate();
        m.year = detail::parse_year(r[3], t.origin());
        m.functional_class = parse_functional_class(r[4]);
        m.area_type = parse_area_type(r[5]);
        auto v = parse_number(r[6]);
        if (!v || *v < 0)
            throw ValidationError("malformed or negative VMT in " + t.origin());
        m.vmt_millions = *v;
        out.push_back(std::move(m));
    }
    return out;
}

//! Every vehicle and person must reference a crash in the set.
inline void check_references(CrashRecords const& records)
{
    std::set<std::string> ids;
    for (auto const& c : records.crashes)
        ids.insert(c.crash_id);
    for (auto const& v : records.vehicles)
    {
        if (!ids.count(v.crash_id))
            throw ReferentialError("vehicle references unknown crash '" + v.crash_id + "'");
    }
    for (auto const& p : records.persons)
    {
        if (!ids.count(p.crash_id))
            throw ReferentialError("person references unknown crash '" + p.crash_id + "'");
    }
}

//---------------------------------------------------------------------------//
// Directory form
//---------------------------------------------------------------------------//

struct Bundle
{
    CrashRecords records;
    std::vector<MileageCell> mileage;
};

inline nlohmann::json region_json(Region const& r)
{
    return {{"kind", to_string(r.kind)}, {"name", r.name}, {"state", r.state}};
}

inline Region region_from_json(nlohmann::json const& j)
{
    Region r;
    r.kind = parse_region_kind(j.at("kind").get<std::string>());
    r.name = j.at("name").get<std::string>();
    r.state = j.value("state", "");
    r.validate();
    return r;
}

//! Write the four tables and a manifest.json into \p dir.
inline void write_bundle(Bundle const& bundle,
                         std::filesystem::path const& dir,
                         nlohmann::json extra_manifest = nlohmann::json::object(),
                         std::string const& preamble = {})
{
    std::filesystem::create_directories(dir);
    auto put = [&](char const* name, std::string const& body) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out)
            throw InputError("cannot write '" + (dir / name).string() + "'");
        out << preamble << body;
    };
    put("crashes.csv", write_crashes(bundle.records.crashes));
    put("vehicles.csv", write_vehicles(bundle.records.vehicles));
    put("persons.csv", write_persons(bundle.records.persons));
    put("mileage.csv", write_mileage(bundle.mileage));

    nlohmann::json manifest = std::move(extra_manifest);
    manifest["format"] = "crashbench-canonical/1";
    manifest["tables"] = {{"crashes", "crashes.csv"},
                          {"vehicles", "vehicles.csv"},
                          {"persons", "persons.csv"},
                          {"mileage", "mileage.csv"}};
    std::set<std::string> sources;
    for (auto const& c : bundle.records.crashes)
        sources.insert(c.source);
    manifest["sources"] = sources;
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
}

inline Bundle read_bundle(std::filesystem::path const& dir)
{
    auto manifest_path = dir / "manifest.json";
    auto text = csv::read_file(manifest_path.string());
    auto manifest = nlohmann::json::parse(text, nullptr, false);
    if (manifest.is_discarded())
        throw SchemaError("malformed JSON in " + manifest_path.string());
    auto const& tables = manifest.at("tables");
    auto path = [&](char const* key) { return (dir / tables.at(key).get<std::string>()).string(); };
    Bundle b;
    b.records.crashes = read_crashes(csv::read(path("crashes")));
    b.records.vehicles = read_vehicles(csv::read(path("vehicles")));
    b.records.persons = read_persons(csv::read(path("persons")));
    b.mileage = read_mileage(csv::read(path("mileage")));
    check_references(b.records);
    return b;
}

}  // namespace crashbench::canonical
