#pragma once

/*
 * Run manifests: which raw files to load, with which spec, for which region
 * and year. Key-value format; paths are relative to the manifest.
 *
 *   sources = crss, fars
 *   crss.schema = ../schemas/crss.spec
 *   crss.crash = accident.csv
 *   crss.vehicle = vehicle.csv
 *   crss.person = person.csv
 *   crss.region = national            county regions also set crss.state
 *   crss.year = 2022
 *
 *   mileage = vm2
 *   vm2.spec = ../schemas/vm2.spec
 *   vm2.file = vm2_2022.csv
 *   vm2.region = national
 *   vm2.year = 2022
 *
 *   shares.spec = ../schemas/vm4.spec
 *   shares.file = vm4_2022.csv
 *   road_rule.national = exclude_interstate
 */

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crashbench/canonical_io.hpp"
#include "crashbench/ingest.hpp"
#include "crashbench/kvfile.hpp"
#include "crashbench/rates.hpp"
#include "crashbench/schema.hpp"

namespace crashbench
{
struct SourceEntry
{
    std::string name;
    std::string schema;
    std::string crash;
    std::string vehicle;
    std::string person;
    SourceContext context;
};

struct MileageEntry
{
    std::string name;
    std::string spec;
    std::string file;
    SourceContext context;
};

struct Manifest
{
    std::filesystem::path path;
    std::vector<SourceEntry> sources;
    std::vector<MileageEntry> mileage;
    std::optional<std::string> shares_spec;
    std::optional<std::string> shares_file;
    std::map<std::string, std::string> road_rules;

    static Manifest read(std::filesystem::path const& path)
    {
        auto kv = KeyValueFile::read(path.string());
        Manifest m;
        m.path = path;
        auto dir = path.parent_path();
        auto resolve = [&](std::string const& rel) -> std::string {
            if (rel.empty())
                return {};
            std::filesystem::path p(rel);
            return (p.is_absolute() ? p : dir / p).lexically_normal().string();
        };
        auto context = [&](std::string const& prefix) {
            SourceContext ctx;
            auto name = kv.require(prefix + ".region");
            auto state = kv.get_or(prefix + ".state", "");
            if (state.empty())
            {
                ctx.region.name = name;
            }
            else
            {
                ctx.region = Region::county(name, state);
            }
            ctx.region.validate();
            ctx.year = static_cast<int>(kv.require_number(prefix + ".year"));
            return ctx;
        };
        for (auto const& name : split_trimmed(kv.get_or("sources", ""), ','))
        {
            SourceEntry s;
            s.name = name;
            s.schema = resolve(kv.require(name + ".schema"));
            s.crash = resolve(kv.require(name + ".crash"));
            s.vehicle = resolve(kv.get_or(name + ".vehicle", ""));
            s.person = resolve(kv.get_or(name + ".person", ""));
            s.context = context(name);
            m.sources.push_back(std::move(s));
        }
        for (auto const& name : split_trimmed(kv.get_or("mileage", ""), ','))
        {
            MileageEntry e;
            e.name = name;
            e.spec = resolve(kv.require(name + ".spec"));
            e.file = resolve(kv.require(name + ".file"));
            e.context = context(name);
            m.mileage.push_back(std::move(e));
        }
        if (kv.has("shares.spec"))
        {
            m.shares_spec = resolve(kv.require("shares.spec"));
            m.shares_file = resolve(kv.require("shares.file"));
        }
        for (auto const& key : kv.keys_with_prefix("road_rule"))
            m.road_rules[key.substr(std::string("road_rule.").size())] = kv.require(key);
        return m;
    }

    //! Every file the manifest reads, for provenance digests.
    std::vector<std::string> input_files() const
    {
        std::vector<std::string> out{path.string()};
        for (auto const& s : sources)
        {
            for (auto const& f : {s.schema, s.crash, s.vehicle, s.person})
            {
                if (!f.empty())
                    out.push_back(f);
            }
        }
        for (auto const& e : mileage)
        {
            out.push_back(e.spec);
            out.push_back(e.file);
        }
        if (shares_spec)
        {
            out.push_back(*shares_spec);
            out.push_back(*shares_file);
        }
        return out;
    }
};

struct LoadedInputs
{
    canonical::Bundle bundle;
    std::optional<PassengerShareTable> shares;
    //! Per-source ingest diagnostics, keyed by manifest source name.
    std::map<std::string, IngestDiagnostics> diagnostics;
};

inline LoadedInputs load_manifest(Manifest const& m)
{
    LoadedInputs out;
    for (auto const& s : m.sources)
    {
        auto spec = SchemaSpec::read(s.schema);
        auto records = load_crash_source(spec, s.crash, s.vehicle, s.person, s.context);
        out.diagnostics[s.name] = records.diagnostics;
        out.bundle.records.append(std::move(records));
    }
    out.bundle.records.sort();
    for (auto const& e : m.mileage)
    {
        auto spec = MileageSpec::read(e.spec);
        auto cells = load_mileage(spec, csv::read(e.file), e.context);
        out.bundle.mileage.insert(out.bundle.mileage.end(), cells.begin(), cells.end());
    }
    if (m.shares_spec)
        out.shares = load_passenger_share(ShareSpec::read(*m.shares_spec), csv::read(*m.shares_file));
    return out;
}

}  // namespace crashbench
