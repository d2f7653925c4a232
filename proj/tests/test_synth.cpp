#include <gtest/gtest.h>

#include <cmath>

#include "crashbench/filters.hpp"
#include "crashbench/rates.hpp"
#include "crashbench/synth.hpp"

#include "test_support.hpp"

using namespace crashbench;
using crashbench::test::data_path;

namespace
{
PopulationSpec read_spec(std::string const& name)
{
    return PopulationSpec::from_kv(KeyValueFile::read(data_path("fixtures/synth/" + name)));
}

double binomial_sigma(double p, double n) { return std::sqrt(p * (1 - p) / n); }
}  // namespace

TEST(Generate, TownExample)
{
    auto pop = generate(read_spec("town.spec"));
    ASSERT_EQ(pop.crashes.size(), 2u);
    ASSERT_EQ(pop.vehicles.size(), 3u);
    auto s = select_subset(pop.crashes, pop.vehicles, SubsetRules::ads_comparable());
    double vmt = *pop.spec.vmt_millions;
    EXPECT_DOUBLE_EQ(count_crashed_vehicles(s, SeverityLevel::PoliceReported) / vmt,
                     1.0 / 4000.0 * 1e6);
    EXPECT_DOUBLE_EQ(count_crashes(s, SeverityLevel::PoliceReported) / vmt, 1.0 / 6000.0 * 1e6);
    EXPECT_EQ(pop.truth.vehicles, 3.0);
    EXPECT_EQ(pop.truth.crashes, 2.0);
}

TEST(Generate, SingleVehicleCrashes)
{
    PopulationSpec spec;
    spec.seed = 17;
    spec.n_crashes = 250;
    auto pop = generate(spec);
    EXPECT_EQ(pop.vehicles.size(), pop.crashes.size());
    for (std::size_t i = 0; i < pop.crashes.size(); ++i)
        EXPECT_EQ(pop.vehicles[i].crash_id, pop.crashes[i].crash_id);
}

TEST(Generate, DeterministicPerSeed)
{
    auto spec = read_spec("mixed.spec");
    auto a = generate(spec);
    auto b = generate(spec);
    EXPECT_EQ(a.crashes, b.crashes);
    EXPECT_EQ(a.vehicles, b.vehicles);
    spec.seed += 1;
    EXPECT_NE(generate(spec).crashes, a.crashes);
}

TEST(Generate, WeightedPopulationIsTaggedAsSample)
{
    auto pop = generate(read_spec("mixed.spec"));
    EXPECT_EQ(pop.crashes.front().source, "synthetic-sample");
    for (auto const& c : pop.crashes)
    {
        EXPECT_GE(c.sample_weight, 20.0);
        EXPECT_LE(c.sample_weight, 900.0);
    }
}

TEST(Generate, InvalidSpecsRejected)
{
    PopulationSpec spec;
    spec.body = {{{BodyClass::Passenger, 0.5}, {BodyClass::OtherVehicle, 0.4}}};
    EXPECT_THROW(generate(spec), ValidationError);
    spec = {};
    spec.multiplicity = {{{0, 1.0}}};
    EXPECT_THROW(generate(spec), ValidationError);
    spec = {};
    spec.tow_probability = 1.5;
    EXPECT_THROW(generate(spec), ValidationError);
    spec = {};
    spec.weight_kind = WeightKind::UniformReal;
    spec.weight_min = 5;
    spec.weight_max = 2;
    EXPECT_THROW(generate(spec), ValidationError);
    EXPECT_THROW(PopulationSpec::from_kv(KeyValueFile::parse("weight.kind = lognormal\n")),
                 SchemaError);
    EXPECT_THROW(PopulationSpec::from_kv(KeyValueFile::parse("body = bicycle:1\n")), SchemaError);
}

TEST(BruteForce, EmptyPopulationCountsZero)
{
    TallyQuestion q;
    EXPECT_EQ(brute_force_tally({}, {}, q), 0.0);
    q.level = TallyLevel::Crash;
    EXPECT_EQ(brute_force_tally({}, {}, q), 0.0);
}

TEST(BruteForce, DoublingWeightsDoublesCounts)
{
    auto spec = read_spec("mixed.spec");
    spec.weight_kind = WeightKind::Constant;
    spec.weight_value = 1.0;
    auto one = generate(spec);
    spec.weight_value = 2.0;
    auto two = generate(spec);
    for (auto level : kObservedSeverities)
    {
        TallyQuestion q;
        q.severity = level;
        EXPECT_EQ(brute_force_tally(two.crashes, two.vehicles, q),
                  2 * brute_force_tally(one.crashes, one.vehicles, q));
    }
}

TEST(BruteForce, AgreesWithGroundTruth)
{
    auto pop = generate(read_spec("mixed.spec"));
    TallyQuestion q;
    q.classes = {BodyClass::Passenger};
    EXPECT_NEAR(brute_force_tally(pop.crashes, pop.vehicles, q),
                pop.truth.subset_vehicles.at(SeverityLevel::PoliceReported).passenger, 1e-6);
    q.classes = {BodyClass::Passenger, BodyClass::VehicleNFS};
    q.level = TallyLevel::Crash;
    EXPECT_NEAR(brute_force_tally(pop.crashes, pop.vehicles, q),
                pop.truth.subset_crashes.at(SeverityLevel::PoliceReported), 1e-6);
}

//---------------------------------------------------------------------------//

TEST(SimulatePower, NullRejectsAtExactPoissonLevel)
{
    // Exact rejection probability of the test at lambda*t = 1000 under H0.
    double exact = 0.051769129519292495;
    PowerSimulation sim{1.0, 1.0, 1000.0, 0.05, 20000, 3};
    double p = simulate_power(sim);
    EXPECT_NEAR(p, exact, 3 * binomial_sigma(exact, 20000));
    EXPECT_NEAR(p, 0.05, 3 * binomial_sigma(0.05, 20000));
}

TEST(SimulatePower, FatalHalfRateAtPublishedMileage)
{
    // Exact Poisson power at r = 0.5 and t = 1451.26 million miles.
    double exact = 0.8314337458440032;
    PowerSimulation sim{38507.0 / 2140140.0, 0.5, 1451.2634, 0.05, 20000, 11};
    EXPECT_NEAR(simulate_power(sim), exact, 3 * binomial_sigma(exact, 20000));
}

TEST(SimulatePower, LargeMileageAlwaysRejects)
{
    PowerSimulation sim{4.1, 0.5, 1e4, 0.05, 2000, 5};
    EXPECT_EQ(simulate_power(sim), 1.0);
}

TEST(SimulatePower, IndependentOfThreadCount)
{
    PowerSimulation sim{1.0, 0.8, 200.0, 0.05, 5000, 9, 1};
    double single = simulate_power(sim);
    sim.jobs = 4;
    EXPECT_EQ(simulate_power(sim), single);
}

TEST(SimulatePower, Errors)
{
    EXPECT_THROW(simulate_power({1.0, 0.5, 10.0, 0.05, 999}), DomainError);
    EXPECT_THROW(simulate_power({0.0, 0.5, 10.0}), DomainError);
    EXPECT_THROW(simulate_power({1.0, 0.5, 10.0, 1.0}), DomainError);
}
