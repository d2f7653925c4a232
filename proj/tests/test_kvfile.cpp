#include <gtest/gtest.h>

#include "crashbench/kvfile.hpp"

using namespace crashbench;

TEST(KeyValue, SectionsCommentsAndContinuations)
{
    auto kv = KeyValueFile::parse(R"(# header
source = crss   # trailing comment
[crash]
key = CASENUM
codes = 1, 2, \
        3, 4
[vehicle]
key = CASENUM
)");
    EXPECT_EQ(kv.require("source"), "crss");
    EXPECT_EQ(kv.require("crash.key"), "CASENUM");
    EXPECT_EQ(kv.require("vehicle.key"), "CASENUM");
    EXPECT_EQ(kv.require("crash.codes"), "1, 2, 3, 4");
    EXPECT_FALSE(kv.has("key"));
}

TEST(KeyValue, DuplicateKeyIsError)
{
    EXPECT_THROW(KeyValueFile::parse("a = 1\na = 2\n"), SchemaError);
}

TEST(KeyValue, MalformedLines)
{
    EXPECT_THROW(KeyValueFile::parse("just words\n"), SchemaError);
    EXPECT_THROW(KeyValueFile::parse("[open\n"), SchemaError);
    EXPECT_THROW(KeyValueFile::parse(" = value\n"), SchemaError);
    EXPECT_THROW(KeyValueFile::parse("a = 1, \\"), SchemaError);
}

TEST(KeyValue, TypedAccessors)
{
    auto kv = KeyValueFile::parse("n = 2,140,140\nflag = yes\noff = false\nword = x\n");
    EXPECT_EQ(kv.require_number("n"), 2140140.0);
    EXPECT_EQ(kv.number_or("missing", 7.5), 7.5);
    EXPECT_TRUE(kv.bool_or("flag", false));
    EXPECT_FALSE(kv.bool_or("off", true));
    EXPECT_TRUE(kv.bool_or("absent", true));
    EXPECT_THROW(kv.require_number("word"), SchemaError);
    EXPECT_THROW(kv.bool_or("word", false), SchemaError);
    EXPECT_THROW(kv.require("missing"), SchemaError);
    EXPECT_EQ(kv.get_or("missing", "d"), "d");
}

TEST(KeyValue, KeysWithPrefix)
{
    auto kv = KeyValueFile::parse("road_rule.national = a\nroad_rule.la = b\nroad = c\n");
    auto keys = kv.keys_with_prefix("road_rule");
    EXPECT_EQ(keys.size(), 2u);
}

TEST(KeyValue, MissingKeyMessageNamesKey)
{
    auto kv = KeyValueFile::parse("a = 1\n", "spec.kv");
    try
    {
        kv.require("vehicle.unit");
        FAIL();
    }
    catch (SchemaError const& e)
    {
        EXPECT_NE(std::string(e.what()).find("vehicle.unit"), std::string::npos);
    }
}
