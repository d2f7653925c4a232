#include <gtest/gtest.h>

#include "crashbench/benchmark.hpp"
#include "crashbench/ingest.hpp"
#include "crashbench/synth.hpp"

#include "test_support.hpp"

using namespace crashbench;
using crashbench::test::data_path;

namespace
{
std::vector<RegionInputs> table2()
{
    return read_aggregate_inputs(csv::read(data_path("fixtures/aggregate/table2_2022.csv")));
}

Region const kMaricopa = Region::county("maricopa-az", "AZ");
}  // namespace

TEST(AggregateInputs, ReadsFourRegions)
{
    auto in = table2();
    ASSERT_EQ(in.size(), 4u);
    EXPECT_EQ(in[0].region, Region::national());
    EXPECT_FALSE(in[0].census);
    EXPECT_TRUE(in[1].census);
    EXPECT_EQ(*in[0].get("surface_passenger_mmi"), 2140140.0);
    EXPECT_FALSE(in[0].get("no_such_quantity"));
}

TEST(AggregateInputs, RejectsBadRows)
{
    auto header = std::string("region,state,year,quantity,value\n");
    EXPECT_THROW(read_aggregate_inputs(csv::parse(header + "national,,2022,fatal,-3\n")),
                 ValidationError);
    EXPECT_THROW(read_aggregate_inputs(csv::parse(header + "national,,2022,fatal,x\n")),
                 ValidationError);
    EXPECT_THROW(read_aggregate_inputs(csv::parse(header + "national,,2022,fatal,1\n"
                                                           "national,,2022,fatal,2\n")),
                 ValidationError);
    EXPECT_THROW(read_aggregate_inputs(csv::parse(header + "national,,2022,vibes,1\n")),
                 SchemaError);
    EXPECT_THROW(read_aggregate_inputs(csv::parse("region,year\n")), SchemaError);
}

TEST(AggregateInputs, YearFilter)
{
    auto t = csv::read(data_path("fixtures/aggregate/table2_2022.csv"));
    EXPECT_EQ(read_aggregate_inputs(t, 2022).size(), 4u);
    EXPECT_TRUE(read_aggregate_inputs(t, 2021).empty());
}

TEST(ComputeBenchmark, NationalCells)
{
    auto report = compute_benchmark(table2());
    auto us = Region::national();
    EXPECT_EQ(report.cell("police_reported", us).display(), "8,768,951 (4.10)");
    EXPECT_EQ(report.cell("fatal", us).display(), "38,507 (18.0)");
    EXPECT_EQ(report.cell("crashes", us).display(), "5,930,496");
    EXPECT_EQ(report.cell("mileage_surface", us).display(), "2,140,140");
    // Blincoe: pdo / (1 - 0.597) + nonfatal / (1 - 0.319) + fatal.
    double blincoe = 6185393 / 0.403 + 2545051 / 0.681 + 38507;
    EXPECT_NEAR(*report.cell("blincoe_any_pdi", us).value, blincoe, 1e-6);
    EXPECT_THROW(report.cell("fatal", Region::county("nowhere", "ZZ")), ValidationError);
}

TEST(ComputeBenchmark, CensusCellsCarryExactIntervals)
{
    auto report = compute_benchmark(table2());
    auto const& fatal = report.cell("fatal", kMaricopa);
    ASSERT_TRUE(fatal.rate && fatal.rate->ci_low_ipmm);
    EXPECT_LT(*fatal.rate->ci_low_ipmm, fatal.rate->rate_ipmm);
    EXPECT_FALSE(report.cell("fatal", Region::national()).rate->ci_low_ipmm);
    EXPECT_FALSE(report.cell("blincoe_any_injury", kMaricopa).rate->ci_low_ipmm);
}

TEST(ComputeBenchmark, SingleRowSelection)
{
    BenchmarkOptions opts;
    opts.rows = {"fatal"};
    auto report = compute_benchmark(table2(), opts);
    ASSERT_EQ(report.rows.size(), 1u);
    EXPECT_EQ(report.cells[0].size(), 4u);
    EXPECT_EQ(report.cell("fatal", kMaricopa).display(), "602 (24.2)");
    opts.rows = {"nonsense"};
    EXPECT_THROW(compute_benchmark(table2(), opts), SchemaError);
}

TEST(ComputeBenchmark, MissingQuantityLeavesBlankCell)
{
    auto header = std::string("region,state,year,quantity,value\n");
    auto in = read_aggregate_inputs(
        csv::parse(header + "national,,2022,fatal,10\nnational,,2022,surface_passenger_mmi,100\n"));
    auto report = compute_benchmark(in);
    EXPECT_EQ(report.cell("fatal", Region::national()).display(), "10 (100)");
    EXPECT_EQ(report.cell("police_reported", Region::national()).display(), "");
    EXPECT_EQ(report.cell("blincoe_any_pdi", Region::national()).display(), "");
}

TEST(ComputeBenchmark, Diagnostics)
{
    auto report = compute_benchmark(table2());
    auto const& d = report.diagnostics[0];
    EXPECT_NEAR(*d.pdo_share_vehicle, 0.7054, 1e-4);
    EXPECT_NEAR(*d.vehicle_to_crash_ratio, 10528849.0 / 5930496.0, 1e-12);
}

//---------------------------------------------------------------------------//

TEST(RecordsPath, MatchesBruteForceCounts)
{
    PopulationSpec spec;
    spec.seed = 404;
    spec.n_crashes = 800;
    spec.multiplicity = {{{1, 0.5}, {2, 0.4}, {3, 0.1}}};
    spec.weight_kind = WeightKind::UniformInt;
    spec.weight_min = 1;
    spec.weight_max = 50;
    auto pop = generate(spec);
    CrashRecords records;
    records.crashes = pop.crashes;
    records.vehicles = pop.vehicles;

    auto mileage = load_mileage(MileageSpec::read(data_path("schemas/vm2.spec")),
                                csv::read(data_path("fixtures/mileage/vm2_2022.csv")),
                                {Region::national(), 2022});
    auto shares = load_passenger_share(ShareSpec::read(data_path("schemas/vm4.spec")),
                                       csv::read(data_path("fixtures/mileage/vm4_2022.csv")));
    auto in = region_inputs_from_records(records, mileage, shares,
                                         {Region::national(), 2022, "exclude_interstate"});

    double w = brute_force_imputation_weight(pop.crashes, pop.vehicles);
    EXPECT_NEAR(*in.imputation_weight, w, 1e-12);
    // Tow and airbag flags come from every eligible unit of the crash, so the
    // passenger and NFS parts are scanned together.
    std::map<SeverityLevel, double> expect;
    for (auto const& c : pop.crashes)
    {
        if (c.road_class != RoadClass::SurfaceStreet)
            continue;
        double passenger = 0, nfs = 0;
        bool towed = c.tow_away, airbag = c.airbag_deployed;
        for (auto const& v : pop.vehicles)
        {
            if (v.crash_id != c.crash_id || !v.in_transport)
                continue;
            if (v.body_class != BodyClass::Passenger && v.body_class != BodyClass::VehicleNFS)
                continue;
            (v.body_class == BodyClass::Passenger ? passenger : nfs) += 1;
            towed = towed || v.towed;
            airbag = airbag || v.airbag_deployed;
        }
        double n = c.sample_weight * (passenger + w * nfs);
        auto k = c.max_kabco;
        bool injury = k != Kabco::O && k != Kabco::Unknown;
        expect[SeverityLevel::PoliceReported] += n;
        expect[SeverityLevel::AnyInjuryReported] += injury ? n : 0;
        expect[SeverityLevel::SuspectedSeriousInjuryPlus] += (k == Kabco::K || k == Kabco::A) ? n : 0;
        expect[SeverityLevel::Fatal] += k == Kabco::K ? n : 0;
        expect[SeverityLevel::TowAway] += towed ? n : 0;
        expect[SeverityLevel::AirbagDeployed] += airbag ? n : 0;
    }
    for (auto level : kObservedSeverities)
        EXPECT_NEAR(*in.get(std::string(to_string(level))), expect[level], 1e-9)
            << to_string(level);
    TallyQuestion all;
    all.surface_streets_only = false;
    all.in_transport_only = false;
    all.classes = {BodyClass::Passenger, BodyClass::VehicleNFS, BodyClass::OtherVehicle};
    all.level = TallyLevel::Crash;
    EXPECT_EQ(*in.get("crashes"), brute_force_tally(pop.crashes, pop.vehicles, all));
    EXPECT_EQ(std::round(*in.get("surface_passenger_mmi")), 2140140.0);

    auto report = compute_benchmark({in});
    EXPECT_NEAR(report.cell("police_reported", Region::national()).rate->rate_ipmm,
                *in.get("police_reported") / *in.get("surface_passenger_mmi"), 1e-15);
}

//---------------------------------------------------------------------------//

TEST(BenchmarkOutput, Shapes)
{
    auto report = compute_benchmark(table2());
    auto wide = csv::parse(benchmark_table_csv(report));
    EXPECT_EQ(wide.header().size(), 6u);
    EXPECT_EQ(wide.rows().size(), benchmark_rows().size());
    auto long_form = csv::parse(benchmark_long_csv(report));
    EXPECT_EQ(long_form.rows().size(), benchmark_rows().size() * 4);
    auto j = benchmark_json(report);
    EXPECT_EQ(j["regions"].size(), 4u);
    EXPECT_EQ(j["rows"].size(), benchmark_rows().size());
    EXPECT_EQ(j["regions"][1]["census"], true);
}
