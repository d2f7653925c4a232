#include <gtest/gtest.h>

#include <algorithm>

#include "crashbench/ingest.hpp"
#include "crashbench/manifest.hpp"

#include "test_support.hpp"

using namespace crashbench;
using crashbench::test::data_path;

namespace
{
SchemaSpec spec(std::string const& name)
{
    return SchemaSpec::read(data_path("schemas/" + name + ".spec"));
}

SourceContext national() { return {Region::national(), 2022}; }

CrashEvent const& crash(CrashRecords const& r, std::string const& id)
{
    auto it = std::find_if(r.crashes.begin(), r.crashes.end(),
                           [&](auto const& c) { return c.crash_id == id; });
    if (it == r.crashes.end())
        throw std::runtime_error("no crash " + id);
    return *it;
}

VehicleInvolvement const& vehicle(CrashRecords const& r, std::string const& id,
                                  std::string const& unit)
{
    auto it = std::find_if(r.vehicles.begin(), r.vehicles.end(), [&](auto const& v) {
        return v.crash_id == id && v.unit_id == unit;
    });
    if (it == r.vehicles.end())
        throw std::runtime_error("no vehicle " + id + "/" + unit);
    return *it;
}

CrashRecords load_fixture(std::string const& dir)
{
    auto m = Manifest::read(data_path("fixtures/" + dir + "/manifest.kv"));
    return load_manifest(m).bundle.records;
}
}  // namespace

TEST(LoadCrashSource, CrssSurfacePassengerRow)
{
    auto accident = csv::parse("CASENUM,WEIGHT,INT_HWY,MAXSEV_IM\n7,12.5,0,0\n");
    auto vehicles = csv::parse("CASENUM,VEH_NO,BODY_TYP,UNITTYPE,TOWED\n7,1,4,1,5\n");
    auto r = load_crash_source(spec("crss"), accident, vehicles, csv::Table{}, national());
    ASSERT_EQ(r.crashes.size(), 1u);
    ASSERT_EQ(r.vehicles.size(), 1u);
    EXPECT_EQ(r.crashes[0].road_class, RoadClass::SurfaceStreet);
    EXPECT_EQ(r.crashes[0].sample_weight, 12.5);
    EXPECT_EQ(r.crashes[0].max_kabco, Kabco::O);
    EXPECT_EQ(r.crashes[0].source, "crss");
    EXPECT_EQ(r.vehicles[0].body_class, BodyClass::Passenger);
    EXPECT_TRUE(r.vehicles[0].in_transport);
    EXPECT_FALSE(r.vehicles[0].towed);
}

TEST(LoadCrashSource, CrssTowCodesAndIsu)
{
    auto r = load_fixture("crss");
    EXPECT_TRUE(vehicle(r, "1001", "1").towed);      // TOWED 2
    EXPECT_FALSE(vehicle(r, "1001", "2").towed);     // TOWED 5
    EXPECT_EQ(vehicle(r, "1001", "2").body_class, BodyClass::VehicleNFS);
    EXPECT_EQ(vehicle(r, "1003", "1").body_class, BodyClass::OtherVehicle);
    EXPECT_EQ(crash(r, "1003").max_kabco, Kabco::InjuredSeverityUnknown);
    EXPECT_EQ(crash(r, "1004").road_class, RoadClass::Unknown);
    EXPECT_TRUE(crash(r, "1001").airbag_deployed);  // person AIR_BAG 1
}

TEST(LoadCrashSource, SwitrsBeatTypeTwoExcluded)
{
    auto r = load_fixture("switrs");
    EXPECT_EQ(crash(r, "9002").road_class, RoadClass::ExcludedHighway);
    EXPECT_EQ(crash(r, "9001").road_class, RoadClass::SurfaceStreet);
    EXPECT_EQ(crash(r, "9004").road_class, RoadClass::Unknown);
    EXPECT_FALSE(r.diagnostics.caveats.empty());
}

TEST(LoadCrashSource, AdotRoadNameOrSpeed)
{
    auto r = load_fixture("adot");
    EXPECT_EQ(crash(r, "2201").road_class, RoadClass::SurfaceStreet);   // Main St, 35
    EXPECT_EQ(crash(r, "2203").road_class, RoadClass::SurfaceStreet);   // Ave, 50
    EXPECT_EQ(crash(r, "2206").road_class, RoadClass::SurfaceStreet);   // 40 mph
    EXPECT_EQ(crash(r, "2202").road_class, RoadClass::ExcludedHighway); // I-10, 65
    EXPECT_EQ(crash(r, "2208").road_class, RoadClass::ExcludedHighway); // Avenida Rio, 60
    EXPECT_EQ(crash(r, "2207").road_class, RoadClass::Unknown);         // blank
    EXPECT_EQ(crash(r, "2206").max_kabco, Kabco::Unknown);              // code 99
    EXPECT_EQ(vehicle(r, "2201", "2").body_class, BodyClass::VehicleNFS);
    EXPECT_EQ(vehicle(r, "2201", "3").body_class, BodyClass::NonVehicle);
}

TEST(LoadCrashSource, EmptyVehicleFileKeepsCrashes)
{
    auto accident = csv::parse("CASENUM,WEIGHT,INT_HWY,MAXSEV_IM\n1,1,0,0\n2,1,1,4\n");
    auto r = load_crash_source(spec("crss"), accident, csv::Table{}, csv::Table{}, national());
    EXPECT_EQ(r.crashes.size(), 2u);
    EXPECT_TRUE(r.vehicles.empty());
    auto header_only = csv::parse("CASENUM,VEH_NO,BODY_TYP,UNITTYPE,TOWED\n");
    auto r2 = load_crash_source(spec("crss"), accident, header_only, csv::Table{}, national());
    EXPECT_EQ(r2.crashes.size(), 2u);
    EXPECT_TRUE(r2.vehicles.empty());
}

TEST(LoadCrashSource, MissingColumnNamesColumn)
{
    auto accident = csv::parse("CASENUM,WEIGHT,MAXSEV_IM\n1,1,0\n", "accident.csv");
    try
    {
        load_crash_source(spec("crss"), accident, csv::Table{}, csv::Table{}, national());
        FAIL();
    }
    catch (SchemaError const& e)
    {
        EXPECT_NE(std::string(e.what()).find("INT_HWY"), std::string::npos) << e.what();
    }
}

TEST(LoadCrashSource, UnresolvedJoinKeyNamesId)
{
    auto accident = csv::parse("CASENUM,WEIGHT,INT_HWY,MAXSEV_IM\n1,1,0,0\n");
    auto vehicles = csv::parse("CASENUM,VEH_NO,BODY_TYP,UNITTYPE,TOWED\n777,1,4,1,0\n");
    try
    {
        load_crash_source(spec("crss"), accident, vehicles, csv::Table{}, national());
        FAIL();
    }
    catch (ReferentialError const& e)
    {
        EXPECT_NE(std::string(e.what()).find("777"), std::string::npos);
    }
}

TEST(LoadCrashSource, UnknownCodesWarnAndFallBack)
{
    auto accident = csv::parse("CASENUM,WEIGHT,INT_HWY,MAXSEV_IM\n1,1,9,8\n");
    auto vehicles = csv::parse("CASENUM,VEH_NO,BODY_TYP,UNITTYPE,TOWED\n1,1,500,1,0\n");
    auto r = load_crash_source(spec("crss"), accident, vehicles, csv::Table{}, national());
    EXPECT_EQ(r.crashes[0].road_class, RoadClass::Unknown);
    EXPECT_EQ(r.crashes[0].max_kabco, Kabco::Unknown);
    EXPECT_EQ(r.vehicles[0].body_class, BodyClass::VehicleNFS);
    EXPECT_EQ(r.diagnostics.warnings.at("unknown_road_code"), 1u);
    EXPECT_EQ(r.diagnostics.warnings.at("unknown_kabco_code"), 1u);
    EXPECT_EQ(r.diagnostics.warnings.at("unknown_body_code"), 1u);
}

TEST(LoadCrashSource, DuplicateKeysRejected)
{
    auto accident = csv::parse("CASENUM,WEIGHT,INT_HWY,MAXSEV_IM\n1,1,0,0\n1,1,0,0\n");
    EXPECT_THROW(load_crash_source(spec("crss"), accident, csv::Table{}, csv::Table{},
                                   national()),
                 ValidationError);
}

TEST(LoadCrashSource, NonPositiveWeightRejected)
{
    auto accident = csv::parse("CASENUM,WEIGHT,INT_HWY,MAXSEV_IM\n1,0,0,0\n");
    EXPECT_THROW(load_crash_source(spec("crss"), accident, csv::Table{}, csv::Table{},
                                   national()),
                 ValidationError);
}

TEST(LoadCrashSource, PersonKabcoFoldsToMaximum)
{
    auto accident = csv::parse("ST_CASE,FUNC_SYS\n5,3\n");
    auto vehicles = csv::parse("ST_CASE,VEH_NO,BODY_TYP,UNITTYPE,TOWED\n5,1,4,1,0\n");
    auto persons = csv::parse("ST_CASE,VEH_NO,PER_NO,INJ_SEV,AIR_BAG\n"
                              "5,1,1,1,20\n5,1,2,4,20\n5,1,3,0,20\n");
    auto r = load_crash_source(spec("fars_merged"), accident, vehicles, persons, national());
    EXPECT_EQ(r.crashes[0].max_kabco, Kabco::K);
    EXPECT_EQ(r.persons.size(), 3u);
}

TEST(LoadCrashSource, FarsFuncSysTwoDependsOnDataset)
{
    auto accident = csv::parse("ST_CASE,FUNC_SYS\n1,2\n2,1\n3,3\n");
    auto merged = load_crash_source(spec("fars_merged"), accident, csv::Table{}, csv::Table{},
                                    national());
    auto fatal = load_crash_source(spec("fars_fatal"), accident, csv::Table{}, csv::Table{},
                                   national());
    EXPECT_EQ(crash(merged, "1").road_class, RoadClass::SurfaceStreet);
    EXPECT_EQ(crash(fatal, "1").road_class, RoadClass::ExcludedHighway);
    EXPECT_EQ(crash(merged, "2").road_class, RoadClass::ExcludedHighway);
    EXPECT_EQ(crash(fatal, "3").road_class, RoadClass::SurfaceStreet);
}

TEST(LoadCrashSource, RowCountConservation)
{
    for (auto dir : {"crss", "fars", "adot", "switrs"})
    {
        SCOPED_TRACE(dir);
        auto r = load_fixture(dir);
        auto const& d = r.diagnostics;
        auto skipped = [&](std::string const& prefix) {
            std::size_t n = 0;
            for (auto const& [k, v] : d.skipped)
                if (k.rfind(prefix, 0) == 0)
                    n += v;
            return n;
        };
        EXPECT_EQ(d.crash_rows, r.crashes.size() + skipped("crash_"));
        EXPECT_EQ(d.vehicle_rows, r.vehicles.size() + skipped("vehicle_"));
        EXPECT_EQ(d.person_rows, r.persons.size() + skipped("person_"));
    }
}

TEST(LoadCrashSource, Idempotent)
{
    for (auto dir : {"crss", "fars", "adot", "switrs"})
    {
        auto a = load_fixture(dir);
        auto b = load_fixture(dir);
        EXPECT_EQ(a.crashes, b.crashes) << dir;
        EXPECT_EQ(a.vehicles, b.vehicles) << dir;
        EXPECT_EQ(a.persons, b.persons) << dir;
    }
}

TEST(LoadCrashSource, SpecSwapYieldsIdenticalRecords)
{
    // One crash expressed in two layouts with different column names and codes.
    auto layout_a = SchemaSpec::from_kv(KeyValueFile::parse(R"(source = alpha
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
in_transport = moving in 1
towed = tow in 1
airbag = none
[person]
key = id
person = pid
airbag = none
)"));
    auto layout_b = SchemaSpec::from_kv(KeyValueFile::parse(R"(source = alpha
kabco.origin = crash
kabco.K = F
kabco.A = SI
kabco.B = MI
kabco.C = PI
kabco.O = N
[crash]
key = Report
road.surface = Street has_token St, Ave || Limit le 45
road.excluded = Street not_null
kabco = Outcome
tow = none
airbag = none
[vehicle]
key = Report
unit = Veh
body.non_vehicle = Kind in PED
body.passenger = Kind in CAR, SUV
body.nfs = Kind in UNK
body.other = Kind in BUS, SEMI
in_transport = Parked in N
towed = Towed in Y
airbag = none
[person]
key = Report
person = Person
airbag = none
)"));
    auto a = load_crash_source(layout_a, csv::parse("id,hwy,sev\nX1,0,3\nX2,1,0\n"),
                               csv::parse("id,unit,body,moving,tow\n"
                                          "X1,1,4,1,1\nX1,2,99,0,0\nX2,1,50,1,0\n"),
                               csv::Table{}, national());
    auto b = load_crash_source(layout_b,
                               csv::parse("Report,Street,Limit,Outcome\n"
                                          "X1,Main St,35,SI\nX2,I-17,65,N\n"),
                               csv::parse("Report,Veh,Kind,Parked,Towed\n"
                                          "X1,1,SUV,N,Y\nX1,2,UNK,Y,N\nX2,1,BUS,N,N\n"),
                               csv::Table{}, national());
    EXPECT_EQ(a.crashes, b.crashes);
    EXPECT_EQ(a.vehicles, b.vehicles);
}

//---------------------------------------------------------------------------//

namespace
{
MileageSpec cpm_spec()
{
    return MileageSpec::read(data_path("schemas/cpm.spec"));
}
SourceContext maricopa() { return {Region::county("maricopa-az", "AZ"), 2022}; }
}  // namespace

TEST(LoadMileage, MillionsCell)
{
    auto spec = MileageSpec::from_kv(KeyValueFile::parse(R"(source = t
functional_class.column = fc
functional_class.map.minor_arterial = 4
area_type.column = area
area_type.map.urban = U
vmt.column = vmt
vmt.unit = millions
)"));
    auto cells = load_mileage(spec, csv::parse("fc,area,vmt\n4,U,\"1,234.5\"\n"), maricopa());
    ASSERT_EQ(cells.size(), 1u);
    EXPECT_EQ(cells[0].vmt_millions, 1234.5);
    EXPECT_EQ(cells[0].functional_class, FunctionalClass::MinorArterial);
    EXPECT_EQ(cells[0].area_type, AreaType::Urban);
    EXPECT_EQ(cells[0].region, maricopa().region);
}

TEST(LoadMileage, ThousandsConverted)
{
    auto cells = load_mileage(cpm_spec(), csv::parse("FunctionalSystem,UrbanRural,AnnualVMT\n"
                                                     "4,U,1234500\n"),
                              maricopa());
    ASSERT_EQ(cells.size(), 1u);
    EXPECT_DOUBLE_EQ(cells[0].vmt_millions, 1234.5);
}

TEST(LoadMileage, NegativeAndDuplicateRejected)
{
    EXPECT_THROW(load_mileage(cpm_spec(),
                              csv::parse("FunctionalSystem,UrbanRural,AnnualVMT\n4,U,-1\n"),
                              maricopa()),
                 ValidationError);
    EXPECT_THROW(load_mileage(cpm_spec(),
                              csv::parse("FunctionalSystem,UrbanRural,AnnualVMT\n"
                                         "4,U,1\n4,U,2\n"),
                              maricopa()),
                 ValidationError);
    EXPECT_THROW(load_mileage(cpm_spec(),
                              csv::parse("FunctionalSystem,UrbanRural,AnnualVMT\n9,U,1\n"),
                              maricopa()),
                 ValidationError);
}

TEST(LoadMileage, NationalFixtureTotal)
{
    auto cells = load_mileage(MileageSpec::read(data_path("schemas/vm2.spec")),
                              csv::read(data_path("fixtures/mileage/vm2_2022.csv")),
                              national());
    EXPECT_EQ(cells.size(), 14u);
    double total = 0;
    for (auto const& c : cells)
        total += c.vmt_millions;
    EXPECT_EQ(std::round(total), 3196191.0);
}

//---------------------------------------------------------------------------//

namespace
{
ShareSpec share_spec(std::string const& format)
{
    return ShareSpec::from_kv(KeyValueFile::parse(R"(source = t
state.column = state
area_type.column = area
area_type.map.urban = Urban
group.column = group
group.map.interstate = I
group.map.other_arterial = OA
group.map.other = O
share.columns = share
share.format = )" + format + "\n"));
}
}  // namespace

TEST(LoadPassengerShare, PercentSign)
{
    auto t = load_passenger_share(share_spec("auto"),
                                  csv::parse("state,area,group,share\n"
                                             "AZ,Urban,I,86.0%\nAZ,Urban,OA,92.0%\n"
                                             "AZ,Urban,O,93.5%\n"));
    EXPECT_DOUBLE_EQ(t.at({"AZ", AreaType::Urban, ClassGroup::OtherArterial}), 0.92);
}

TEST(LoadPassengerShare, FractionsAndSummedColumns)
{
    auto t = load_passenger_share(ShareSpec::read(data_path("schemas/vm4.spec")),
                                  csv::read(data_path("fixtures/mileage/vm4_2022.csv")));
    EXPECT_NEAR(t.at({"US", AreaType::Urban, ClassGroup::Interstate}), 0.9155, 1e-12);
    auto f = load_passenger_share(share_spec("fraction"),
                                  csv::parse("state,area,group,share\n"
                                             "CA,Urban,I,0.8\nCA,Urban,OA,0.9\nCA,Urban,O,0.92\n"));
    EXPECT_EQ(f.at({"CA", AreaType::Urban, ClassGroup::Other}), 0.92);
}

TEST(LoadPassengerShare, MissingGroupListed)
{
    try
    {
        load_passenger_share(share_spec("percent"),
                             csv::parse("state,area,group,share\nAZ,Urban,I,86\nAZ,Urban,O,93\n"));
        FAIL();
    }
    catch (ValidationError const& e)
    {
        EXPECT_NE(std::string(e.what()).find("AZ/urban/other_arterial"), std::string::npos)
            << e.what();
    }
}

TEST(LoadPassengerShare, OutOfRangeRejected)
{
    EXPECT_THROW(load_passenger_share(share_spec("percent"),
                                      csv::parse("state,area,group,share\n"
                                                 "AZ,Urban,I,101\nAZ,Urban,OA,90\n"
                                                 "AZ,Urban,O,90\n")),
                 ValidationError);
    EXPECT_THROW(load_passenger_share(share_spec("fraction"),
                                      csv::parse("state,area,group,share\n"
                                                 "AZ,Urban,I,1.5\nAZ,Urban,OA,0.9\n"
                                                 "AZ,Urban,O,0.9\n")),
                 ValidationError);
}
