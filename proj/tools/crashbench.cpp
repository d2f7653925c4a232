// crashbench: ingest crash files, build benchmark tables, and size studies.
//
// Exit codes: 0 success, 1 internal error, 2 input or validation error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "crashbench/benchmark.hpp"
#include "crashbench/canonical_io.hpp"
#include "crashbench/manifest.hpp"
#include "crashbench/power.hpp"
#include "crashbench/provenance.hpp"
#include "crashbench/synth.hpp"

namespace fs = std::filesystem;
using namespace crashbench;

namespace
{
struct Global
{
    unsigned jobs = 0;
    int verbosity = 0;
    std::string config_text;
};

void write_text(fs::path const& path, std::string const& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InputError("cannot write '" + path.string() + "'");
    out << text;
}

//! JSON document with a provenance block.
std::string json_with_provenance(nlohmann::json j, Provenance const& p)
{
    j["provenance"] = p.json();
    return j.dump(2) + "\n";
}

Provenance make_provenance(Global const& g, std::vector<std::string> const& inputs,
                           std::map<std::string, std::string> resolved)
{
    Provenance p;
    resolved["config_file"] = g.config_text;
    p.set_config(resolved);
    for (auto const& f : inputs)
        p.add_input(f);
    return p;
}

std::vector<SeverityLevel> all_observed() { return {kObservedSeverities.begin(), kObservedSeverities.end()}; }

//---------------------------------------------------------------------------//
// ingest
//---------------------------------------------------------------------------//

struct IngestArgs
{
    std::string manifest;
    std::string out;
};

nlohmann::json build_audit(LoadedInputs const& loaded)
{
    nlohmann::json audit;
    IngestDiagnostics all;
    for (auto const& [name, d] : loaded.diagnostics)
        all.merge(d);
    std::set<std::pair<Region, int>> groups;
    for (auto const& c : loaded.bundle.records.crashes)
        groups.emplace(c.region, c.year);
    auto& regions = audit["subsets"] = nlohmann::json::array();
    for (auto const& [region, year] : groups)
    {
        std::vector<CrashEvent> crashes;
        std::set<std::string> ids;
        for (auto const& c : loaded.bundle.records.crashes)
        {
            if (c.region == region && c.year == year)
            {
                crashes.push_back(c);
                ids.insert(c.crash_id);
            }
        }
        std::vector<VehicleInvolvement> vehicles;
        for (auto const& v : loaded.bundle.records.vehicles)
        {
            if (ids.count(v.crash_id))
                vehicles.push_back(v);
        }
        auto subset = select_subset(crashes, vehicles, SubsetRules::ads_comparable());
        std::optional<ImputationWeight> w;
        try
        {
            w = subset.imputation_weight(region);
        }
        catch (UndefinedError const&)
        {
        }
        auto j = audit_json(subset, w, &all);
        j["region"] = canonical::region_json(region);
        j["year"] = year;
        regions.push_back(std::move(j));
    }
    nlohmann::json per_source;
    for (auto const& [name, d] : loaded.diagnostics)
    {
        per_source[name] = {{"crash_rows", d.crash_rows},
                            {"vehicle_rows", d.vehicle_rows},
                            {"person_rows", d.person_rows},
                            {"skipped", d.skipped},
                            {"warnings", d.warnings},
                            {"caveats", d.caveats}};
    }
    audit["sources"] = per_source;
    return audit;
}

int cmd_ingest(Global const& g, IngestArgs const& a)
{
    auto manifest = Manifest::read(a.manifest);
    auto loaded = load_manifest(manifest);
    auto prov = make_provenance(g, manifest.input_files(),
                                {{"command", "ingest"}, {"manifest", a.manifest}});
    nlohmann::json extra;
    extra["provenance"] = prov.json();
    canonical::write_bundle(loaded.bundle, a.out, extra, prov.csv_preamble());
    write_text(fs::path(a.out) / "audit.json", json_with_provenance(build_audit(loaded), prov));
    if (g.verbosity > 0)
    {
        std::cerr << "ingested " << loaded.bundle.records.crashes.size() << " crashes, "
                  << loaded.bundle.records.vehicles.size() << " vehicles into " << a.out
                  << "\n";
    }
    return 0;
}

//---------------------------------------------------------------------------//
// benchmark
//---------------------------------------------------------------------------//

struct BenchmarkArgs
{
    std::string aggregate;
    std::string manifest;
    int year = 0;
    std::string road_rule = "exclude_interstate";
    std::vector<std::string> rows;
    std::vector<std::string> regions;
    std::string out;
    std::string format = "both";
};

std::vector<RegionInputs> benchmark_inputs(BenchmarkArgs const& a,
                                           std::vector<std::string>& input_files)
{
    std::vector<RegionInputs> inputs;
    if (!a.aggregate.empty())
    {
        input_files.push_back(a.aggregate);
        inputs = read_aggregate_inputs(csv::read(a.aggregate),
                                       a.year ? std::optional<int>(a.year) : std::nullopt);
    }
    else
    {
        auto manifest = Manifest::read(a.manifest);
        input_files = manifest.input_files();
        auto loaded = load_manifest(manifest);
        PassengerShareTable shares = loaded.shares ? *loaded.shares : PassengerShareTable{};
        std::set<std::pair<Region, int>> groups;
        for (auto const& c : loaded.bundle.records.crashes)
        {
            if (!a.year || c.year == a.year)
                groups.emplace(c.region, c.year);
        }
        for (auto const& [region, year] : groups)
        {
            RecordBenchmarkConfig cfg;
            cfg.region = region;
            cfg.year = year;
            auto it = manifest.road_rules.find(region.name);
            cfg.road_rule = it != manifest.road_rules.end() ? it->second : a.road_rule;
            std::vector<MileageCell> cells;
            for (auto const& m : loaded.bundle.mileage)
            {
                if (m.region == region && m.year == year)
                    cells.push_back(m);
            }
            inputs.push_back(
                region_inputs_from_records(loaded.bundle.records, cells, shares, cfg));
        }
    }
    if (!a.regions.empty())
    {
        std::vector<RegionInputs> kept;
        for (auto const& in : inputs)
        {
            if (std::find(a.regions.begin(), a.regions.end(), in.region.name) != a.regions.end())
                kept.push_back(in);
        }
        inputs = std::move(kept);
    }
    if (inputs.empty())
        throw ValidationError("no regions selected for the benchmark");
    return inputs;
}

int cmd_benchmark(Global const& g, BenchmarkArgs const& a)
{
    if (a.aggregate.empty() == a.manifest.empty())
        throw InputError("benchmark needs exactly one of --aggregate or --manifest");
    std::vector<std::string> files;
    auto inputs = benchmark_inputs(a, files);
    BenchmarkOptions opts;
    opts.rows = a.rows;
    auto report = compute_benchmark(inputs, opts);

    std::string regions;
    for (auto const& r : a.regions)
        regions += r + ",";
    std::string rows;
    for (auto const& r : a.rows)
        rows += r + ",";
    auto prov = make_provenance(g, files,
                                {{"command", "benchmark"},
                                 {"aggregate", a.aggregate},
                                 {"manifest", a.manifest},
                                 {"year", std::to_string(a.year)},
                                 {"road_rule", a.road_rule},
                                 {"rows", rows},
                                 {"regions", regions}});
    if (a.out.empty())
    {
        std::cout << benchmark_table_csv(report);
        return 0;
    }
    fs::path out(a.out);
    if (a.format == "csv" || a.format == "both")
    {
        write_text(out / "benchmark.csv", prov.csv_preamble() + benchmark_table_csv(report));
        write_text(out / "benchmark_long.csv",
                   prov.csv_preamble() + benchmark_long_csv(report));
    }
    if (a.format == "json" || a.format == "both")
        write_text(out / "benchmark.json", json_with_provenance(benchmark_json(report), prov));
    return 0;
}

//---------------------------------------------------------------------------//
// power
//---------------------------------------------------------------------------//

struct PowerArgs
{
    std::vector<std::string> rates;
    std::string aggregate;
    std::string region = "national";
    int year = 0;
    std::vector<std::string> rows{"blanco_any_pdi", "police_reported", "blincoe_any_injury",
                                  "suspected_serious_injury_plus", "fatal"};
    std::vector<double> relative_rates{0.01, 0.1, 0.25, 0.5, 0.75, 1.25, 1.5};
    double alpha = 0.05;
    double power = 0.80;
    bool floor_events = false;
    std::size_t simulate_trials = 0;
    std::uint64_t seed = 20240101;
    std::string out;
    std::string format = "csv";
};

std::vector<PowerRow> power_rows(PowerArgs const& a, std::vector<std::string>& files)
{
    std::vector<PowerRow> rows;
    for (auto const& spec : a.rates)
    {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw InputError("--rate expects label=rate_per_million_miles, got '" + spec + "'");
        auto v = parse_number(spec.substr(eq + 1));
        if (!v)
            throw InputError("malformed rate in '" + spec + "'");
        rows.push_back({spec.substr(0, eq), *v});
    }
    if (!a.aggregate.empty())
    {
        files.push_back(a.aggregate);
        auto inputs = read_aggregate_inputs(csv::read(a.aggregate),
                                            a.year ? std::optional<int>(a.year) : std::nullopt);
        BenchmarkOptions opts;
        opts.rows = a.rows;
        auto report = compute_benchmark(inputs, opts);
        auto it = std::find_if(report.regions.begin(), report.regions.end(),
                               [&](RegionInputs const& r) { return r.region.name == a.region; });
        if (it == report.regions.end())
            throw ValidationError("region '" + a.region + "' not in " + a.aggregate);
        for (auto const& id : a.rows)
        {
            auto const& cell = report.cell(id, it->region);
            if (!cell.rate)
                throw ValidationError("no rate for row '" + id + "' in region '" + a.region + "'");
            rows.push_back({id, cell.rate->rate_ipmm});
        }
    }
    if (rows.empty())
        throw InputError("power needs --rate or --aggregate");
    return rows;
}

int cmd_power(Global const& g, PowerArgs const& a)
{
    std::vector<std::string> files;
    auto rows = power_rows(a, files);
    auto rounding = a.floor_events ? EventRounding::FloorExpectedEvents
                                   : EventRounding::Continuous;
    auto table = power_table(rows, a.relative_rates, a.alpha, a.power, rounding);

    std::string rs;
    for (double r : a.relative_rates)
        rs += format_double(r) + ",";
    std::string rate_flags;
    for (auto const& r : a.rates)
        rate_flags += r + ";";
    auto prov = make_provenance(g, files,
                                {{"command", "power"},
                                 {"rates", rate_flags},
                                 {"aggregate", a.aggregate},
                                 {"region", a.region},
                                 {"relative_rates", rs},
                                 {"alpha", format_double(a.alpha)},
                                 {"power", format_double(a.power)},
                                 {"floor_events", a.floor_events ? "1" : "0"},
                                 {"simulate_trials", std::to_string(a.simulate_trials)},
                                 {"seed", std::to_string(a.seed)}});

    auto json = power_table_json(table);
    if (a.simulate_trials > 0)
    {
        for (std::size_t i = 0; i < table.rows.size(); ++i)
        {
            for (std::size_t k = 0; k < table.relative_rates.size(); ++k)
            {
                auto const& cell = table.cells[i][k];
                if (!cell.vmt_millions)
                    continue;
                PowerSimulation sim;
                sim.benchmark_rate = table.rows[i].benchmark_rate;
                sim.relative_rate = table.relative_rates[k];
                sim.vmt_millions = *cell.vmt_millions;
                sim.alpha = a.alpha;
                sim.n_trials = a.simulate_trials;
                sim.seed = SplitMix64::derive(a.seed, i * 1000 + k);
                sim.jobs = g.jobs;
                json["rows"][i]["cells"][k]["simulated_power"] = simulate_power(sim);
            }
        }
    }

    std::string csv_text = power_table_csv(table);
    if (a.out.empty())
    {
        std::cout << (a.format == "json" ? json.dump(2) + "\n" : csv_text);
        return 0;
    }
    fs::path out(a.out);
    if (a.format == "csv" || a.format == "both")
        write_text(out / "power.csv", prov.csv_preamble() + csv_text);
    if (a.format == "json" || a.format == "both")
        write_text(out / "power.json", json_with_provenance(json, prov));
    return 0;
}

//---------------------------------------------------------------------------//
// synth
//---------------------------------------------------------------------------//

struct SynthArgs
{
    std::string spec;
    std::string out;
};

nlohmann::json truth_json(GroundTruth const& t)
{
    nlohmann::json j;
    j["crashes"] = t.crashes;
    j["vehicles"] = t.vehicles;
    for (auto const& [cls, n] : t.vehicles_by_class)
        j["vehicles_by_class"][std::string(to_string(cls))] = n;
    for (auto const& [level, tally] : t.subset_vehicles)
    {
        j["subset_vehicles"][std::string(to_string(level))]
            = {{"passenger", tally.passenger}, {"vehicle_nfs", tally.nfs}};
    }
    for (auto const& [level, n] : t.subset_crashes)
        j["subset_crashes"][std::string(to_string(level))] = n;
    j["pool"] = {{"passenger", t.pool_passenger}, {"other_vehicle", t.pool_other}};
    return j;
}

int cmd_synth(Global const& g, SynthArgs const& a)
{
    auto spec = PopulationSpec::from_kv(KeyValueFile::read(a.spec));
    auto pop = generate(spec);
    canonical::Bundle bundle;
    bundle.records.crashes = pop.crashes;
    bundle.records.vehicles = pop.vehicles;
    if (spec.vmt_millions)
    {
        MileageCell cell;
        cell.region = spec.region;
        cell.year = spec.year;
        cell.functional_class = FunctionalClass::Aggregate;
        cell.area_type = AreaType::All;
        cell.vmt_millions = *spec.vmt_millions;
        bundle.mileage.push_back(cell);
    }
    auto prov = make_provenance(g, {a.spec}, {{"command", "synth"}, {"spec", a.spec}});
    nlohmann::json extra;
    extra["provenance"] = prov.json();
    canonical::write_bundle(bundle, a.out, extra, prov.csv_preamble());
    write_text(fs::path(a.out) / "ground_truth.json",
               json_with_provenance(truth_json(pop.truth), prov));
    return 0;
}

//---------------------------------------------------------------------------//
// report
//---------------------------------------------------------------------------//

struct ReportArgs
{
    std::string bundle;
    std::string out;
};

int cmd_report(Global const& g, ReportArgs const& a)
{
    auto bundle = canonical::read_bundle(a.bundle);
    auto const& rec = bundle.records;
    std::set<std::pair<Region, int>> groups;
    for (auto const& c : rec.crashes)
        groups.emplace(c.region, c.year);

    nlohmann::json j;
    auto& regions = j["regions"] = nlohmann::json::array();
    for (auto const& [region, year] : groups)
    {
        std::vector<CrashEvent> crashes;
        std::set<std::string> ids;
        for (auto const& c : rec.crashes)
        {
            if (c.region == region && c.year == year)
            {
                crashes.push_back(c);
                ids.insert(c.crash_id);
            }
        }
        std::vector<VehicleInvolvement> vehicles;
        for (auto const& v : rec.vehicles)
        {
            if (ids.count(v.crash_id))
                vehicles.push_back(v);
        }
        nlohmann::json r;
        r["region"] = canonical::region_json(region);
        r["year"] = year;

        auto all = select_subset(crashes, vehicles, SubsetRules::all_vehicles());
        auto all_c = classify_subset(all);
        double n_crashes = count_crashes(all_c, SeverityLevel::PoliceReported);
        double n_vehicles = tally_crashed_vehicles(all_c, SeverityLevel::PoliceReported).total();
        r["all_vehicles"] = {{"crashes", n_crashes}, {"vehicles", n_vehicles}};
        if (n_crashes > 0)
            r["all_vehicles"]["vehicle_to_crash_ratio"] = crash_vs_vehicle_ratio(n_vehicles, n_crashes);

        auto subset = select_subset(crashes, vehicles, SubsetRules::ads_comparable());
        std::optional<ImputationWeight> w;
        try
        {
            w = subset.imputation_weight(region);
        }
        catch (UndefinedError const&)
        {
        }
        r["audit"] = audit_json(subset, w);
        auto classified = classify_subset(subset);
        auto counts = build_severity_counts(classified, w ? w->w : 1.0);
        for (auto level : all_observed())
        {
            r["vehicle_counts"][std::string(to_string(level))] = counts.at(level);
            r["crash_counts"][std::string(to_string(level))] = count_crashes(classified, level);
        }
        if (counts.at(SeverityLevel::PoliceReported) > 0)
        {
            r["pdo_share_vehicle_level"] = pdo_share(counts);
            double pr = count_crashes(classified, SeverityLevel::PoliceReported);
            double inj = count_crashes(classified, SeverityLevel::AnyInjuryReported);
            r["pdo_share_crash_level"] = (pr - inj) / pr;
        }
        regions.push_back(std::move(r));
    }
    auto prov = make_provenance(g, {(fs::path(a.bundle) / "manifest.json").string()},
                                {{"command", "report"}, {"bundle", a.bundle}});
    auto text = json_with_provenance(j, prov);
    if (a.out.empty())
        std::cout << text;
    else
        write_text(a.out, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"crashbench: crashed-vehicle rate benchmarks and study sizing"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key-value config file; flags override its values");
    Global g;
    app.add_option("-j,--jobs", g.jobs, "Worker threads (0: all cores)");
    app.add_flag("-v,--verbose", g.verbosity, "More diagnostics on stderr");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Raw source files to canonical CSVs and audit");
    c_ingest->add_option("--manifest", ingest.manifest, "Run manifest")->required();
    c_ingest->add_option("--out", ingest.out, "Output directory")->required();

    BenchmarkArgs bench;
    auto* c_bench = app.add_subcommand("benchmark", "Benchmark table from aggregates or records");
    c_bench->add_option("--aggregate", bench.aggregate, "Aggregate quantities CSV");
    c_bench->add_option("--manifest", bench.manifest, "Run manifest (records mode)");
    c_bench->add_option("--year", bench.year, "Year to select (0: all)");
    c_bench->add_option("--road-rule", bench.road_rule, "Default mileage road rule");
    c_bench->add_option("--rows", bench.rows, "Row ids to emit")->delimiter(',');
    c_bench->add_option("--regions", bench.regions, "Region names to emit")->delimiter(',');
    c_bench->add_option("--out", bench.out, "Output directory (default: table to stdout)");
    c_bench->add_option("--format", bench.format, "csv, json, or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));

    PowerArgs power;
    auto* c_power = app.add_subcommand("power", "Mileage needed to detect a rate difference");
    c_power->add_option("--rate", power.rates, "label=rate per million miles (repeatable)");
    c_power->add_option("--aggregate", power.aggregate, "Take rates from an aggregate CSV");
    c_power->add_option("--region", power.region, "Region for --aggregate");
    c_power->add_option("--year", power.year, "Year for --aggregate (0: all)");
    c_power->add_option("--rows", power.rows, "Benchmark rows for --aggregate")->delimiter(',');
    c_power->add_option("--r", power.relative_rates, "Relative ADS rates")->delimiter(',');
    c_power->add_option("--alpha", power.alpha, "Two-sided significance level");
    c_power->add_option("--power", power.power, "Target power");
    c_power->add_flag("--floor-events", power.floor_events,
                      "Round expected benchmark events down to an integer");
    c_power->add_option("--simulate-trials", power.simulate_trials,
                        "Monte Carlo trials per cell (JSON output)");
    c_power->add_option("--seed", power.seed, "Monte Carlo seed");
    c_power->add_option("--out", power.out, "Output directory (default: stdout)");
    c_power->add_option("--format", power.format, "csv, json, or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Synthetic population to canonical CSVs");
    c_synth->add_option("--spec", synth.spec, "Population spec")->required();
    c_synth->add_option("--out", synth.out, "Output directory")->required();

    ReportArgs report;
    auto* c_report = app.add_subcommand("report", "Diagnostics for a canonical bundle");
    c_report->add_option("--bundle", report.bundle, "Canonical bundle directory")->required();
    c_report->add_option("--out", report.out, "Output JSON file (default: stdout)");

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::CallForHelp const& e)
    {
        return app.exit(e);
    }
    catch (CLI::CallForAllHelp const& e)
    {
        return app.exit(e);
    }
    catch (CLI::CallForVersion const& e)
    {
        return app.exit(e);
    }
    catch (CLI::ParseError const& e)
    {
        app.exit(e);
        return 2;
    }

    try
    {
        if (auto* cfg = app.get_config_ptr(); cfg && cfg->count() > 0)
            g.config_text = csv::read_file(cfg->as<std::string>());
        if (c_ingest->parsed())
            return cmd_ingest(g, ingest);
        if (c_bench->parsed())
            return cmd_benchmark(g, bench);
        if (c_power->parsed())
            return cmd_power(g, power);
        if (c_synth->parsed())
            return cmd_synth(g, synth);
        if (c_report->parsed())
            return cmd_report(g, report);
    }
    catch (InputError const& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    catch (nlohmann::json::exception const& e)
    {
        std::cerr << "error: malformed JSON input: " << e.what() << "\n";
        return 2;
    }
    catch (std::exception const& e)
    {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
