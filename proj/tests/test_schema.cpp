#include <gtest/gtest.h>

#include "crashbench/schema.hpp"

#include "test_support.hpp"

using namespace crashbench;
using crashbench::test::data_path;

namespace
{
std::string const kMinimal = R"(source = alpha
kabco.origin = crash
kabco.K = 4
kabco.A = 3
kabco.B = 2
kabco.C = 1
kabco.O = 0
[crash]
key = id
road.surface = hwy in 0
road.excluded = hwy in 1
kabco = sev
tow = none
airbag = none
[vehicle]
key = id
unit = unit
body.non_vehicle = none
body.passenger = body in 1:10
body.nfs = body in 99
body.other = body in 11:98
in_transport = always
towed = none
airbag = none
[person]
key = id
person = pid
airbag = none
)";

std::string replaced(std::string text, std::string const& from, std::string const& to)
{
    auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    return text.replace(pos, from.size(), to);
}
}  // namespace

TEST(SchemaSpec, ShippedCrashSpecsLoad)
{
    for (auto name : {"crss", "fars_merged", "fars_fatal", "adot", "switrs"})
    {
        SCOPED_TRACE(name);
        auto spec = SchemaSpec::read(data_path(std::string("schemas/") + name + ".spec"));
        EXPECT_FALSE(spec.source.empty());
        EXPECT_FALSE(spec.vehicle.passenger.is_never());
    }
}

TEST(SchemaSpec, ShippedMileageAndShareSpecsLoad)
{
    for (auto name : {"vm2", "cpm", "prd"})
        EXPECT_NO_THROW(MileageSpec::read(data_path(std::string("schemas/") + name + ".spec")));
    EXPECT_NO_THROW(ShareSpec::read(data_path("schemas/vm4.spec")));
}

TEST(SchemaSpec, CensusFlags)
{
    EXPECT_FALSE(SchemaSpec::read(data_path("schemas/crss.spec")).census);
    EXPECT_TRUE(SchemaSpec::read(data_path("schemas/fars_merged.spec")).census);
    EXPECT_TRUE(SchemaSpec::read(data_path("schemas/adot.spec")).census);
}

TEST(SchemaSpec, SwitrsCarriesPdoCaveat)
{
    auto spec = SchemaSpec::read(data_path("schemas/switrs.spec"));
    ASSERT_FALSE(spec.caveats.empty());
    EXPECT_NE(spec.caveats.front().find("PDO"), std::string::npos);
}

TEST(SchemaSpec, CrssInjuredSeverityUnknownCode)
{
    auto spec = SchemaSpec::read(data_path("schemas/crss.spec"));
    EXPECT_EQ(spec.kabco.lookup("5"), Kabco::InjuredSeverityUnknown);
    EXPECT_EQ(spec.kabco.lookup("4"), Kabco::K);
    EXPECT_FALSE(spec.kabco.lookup("9"));
}

TEST(SchemaSpec, MinimalParses)
{
    auto spec = SchemaSpec::from_kv(KeyValueFile::parse(kMinimal));
    EXPECT_EQ(spec.source, "alpha");
    EXPECT_TRUE(spec.census);
}

TEST(SchemaSpec, OverlappingBodyCodesRejected)
{
    auto text = replaced(kMinimal, "body.nfs = body in 99", "body.nfs = body in 10, 99");
    EXPECT_THROW(SchemaSpec::from_kv(KeyValueFile::parse(text)), SchemaError);
}

TEST(SchemaSpec, OverlappingKabcoCodesRejected)
{
    auto text = replaced(kMinimal, "kabco.O = 0", "kabco.O = 0, 1");
    EXPECT_THROW(SchemaSpec::from_kv(KeyValueFile::parse(text)), SchemaError);
}

TEST(SchemaSpec, CensusWithWeightRejected)
{
    auto text = replaced(kMinimal, "key = id\nroad", "key = id\nweight = w\nroad");
    EXPECT_THROW(SchemaSpec::from_kv(KeyValueFile::parse(text)), SchemaError);
}

TEST(SchemaSpec, MissingRuleNamesKey)
{
    auto text = replaced(kMinimal, "in_transport = always\n", "");
    try
    {
        SchemaSpec::from_kv(KeyValueFile::parse(text));
        FAIL();
    }
    catch (SchemaError const& e)
    {
        EXPECT_NE(std::string(e.what()).find("vehicle.in_transport"), std::string::npos);
    }
}

TEST(SchemaSpec, MalformedRuleNamesKey)
{
    auto text = replaced(kMinimal, "tow = none", "tow = flag within Y");
    try
    {
        SchemaSpec::from_kv(KeyValueFile::parse(text));
        FAIL();
    }
    catch (SchemaError const& e)
    {
        EXPECT_NE(std::string(e.what()).find("crash.tow"), std::string::npos);
    }
}

TEST(MileageSpec, UnitParsing)
{
    EXPECT_EQ(parse_vmt_unit("thousands"), VmtUnit::Thousands);
    EXPECT_EQ(parse_vmt_unit("Millions"), VmtUnit::Millions);
    EXPECT_EQ(parse_vmt_unit("mi"), VmtUnit::Miles);
    EXPECT_FALSE(parse_vmt_unit("furlongs"));
    EXPECT_EQ(vmt_unit_divisor(VmtUnit::Thousands), 1000.0);
    EXPECT_EQ(vmt_unit_divisor(VmtUnit::Miles), 1e6);
}
