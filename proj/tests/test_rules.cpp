#include <gtest/gtest.h>

#include "crashbench/rules.hpp"

using namespace crashbench;

namespace
{
// Evaluate a rule against a one-row table built from column/value pairs.
bool eval(std::string const& rule,
          std::vector<std::pair<std::string, std::string>> const& fields)
{
    std::vector<std::string> header, row;
    for (auto const& [k, v] : fields)
    {
        header.push_back(k);
        row.push_back(v);
    }
    csv::Table t(header, {row});
    return Rule::parse(rule).bind(t)(t.rows()[0]);
}
}  // namespace

TEST(CodeSet, RangesAndLiterals)
{
    auto s = CodeSet::parse("1:17, 19:25, 98, Y, \"Mc 85\"");
    EXPECT_TRUE(s.contains("1"));
    EXPECT_TRUE(s.contains("17"));
    EXPECT_FALSE(s.contains("18"));
    EXPECT_TRUE(s.contains(" 20 "));
    EXPECT_TRUE(s.contains("98"));
    EXPECT_TRUE(s.contains("y"));
    EXPECT_TRUE(s.contains("MC 85"));
    EXPECT_FALSE(s.contains(""));
}

TEST(CodeSet, NumericCodesCompareByValue)
{
    auto s = CodeSet::parse("2, 3");
    EXPECT_TRUE(s.contains("02"));
    EXPECT_TRUE(s.contains("3.0"));
}

TEST(CodeSet, Disjointness)
{
    auto passenger = CodeSet::parse("1:17, 19:25, 28:42, 45:49");
    auto nfs = CodeSet::parse("98, 99");
    auto other = CodeSet::parse("18, 26:27, 43:44, 50:97");
    EXPECT_TRUE(passenger.disjoint_from(nfs));
    EXPECT_TRUE(passenger.disjoint_from(other));
    EXPECT_TRUE(nfs.disjoint_from(other));
    EXPECT_FALSE(CodeSet::parse("1:10").disjoint_from(CodeSet::parse("10:20")));
    EXPECT_FALSE(CodeSet::parse("A, B").disjoint_from(CodeSet::parse("b")));
}

TEST(CodeSet, MalformedRange)
{
    EXPECT_THROW(CodeSet::parse("5:1"), SchemaError);
    EXPECT_THROW(CodeSet::parse("a:b"), SchemaError);
}

TEST(Rule, InAndNotIn)
{
    EXPECT_TRUE(eval("INT_HWY in 0", {{"INT_HWY", "0"}}));
    EXPECT_FALSE(eval("INT_HWY in 0", {{"INT_HWY", "1"}}));
    EXPECT_TRUE(eval("chp_beat_type not_in 1, 2, 3", {{"chp_beat_type", "0"}}));
    EXPECT_FALSE(eval("chp_beat_type not_in 1, 2, 3", {{"chp_beat_type", "2"}}));
}

TEST(Rule, NullNeverMatchesComparisons)
{
    EXPECT_FALSE(eval("x in 1", {{"x", ""}}));
    EXPECT_FALSE(eval("x not_in 1", {{"x", ""}}));
    EXPECT_FALSE(eval("x not_in 1", {{"x", "NULL"}}));
    EXPECT_FALSE(eval("x le 45", {{"x", ""}}));
    EXPECT_TRUE(eval("x is_null", {{"x", " "}}));
    EXPECT_TRUE(eval("x not_null", {{"x", "0"}}));
}

TEST(Rule, Thresholds)
{
    EXPECT_TRUE(eval("PostedSpeed le 45", {{"PostedSpeed", "45"}}));
    EXPECT_FALSE(eval("PostedSpeed le 45", {{"PostedSpeed", "50"}}));
    EXPECT_FALSE(eval("PostedSpeed lt 45", {{"PostedSpeed", "45"}}));
    EXPECT_TRUE(eval("PostedSpeed ge 45", {{"PostedSpeed", "45"}}));
    EXPECT_TRUE(eval("PostedSpeed gt 44.5", {{"PostedSpeed", "45"}}));
    EXPECT_FALSE(eval("PostedSpeed le 45", {{"PostedSpeed", "n/a"}}));
}

TEST(Rule, HasTokenIsWholeTokenCaseInsensitive)
{
    std::string rule = "road has_token St, Ave, \"Mc 85\", SR-74";
    EXPECT_TRUE(eval(rule, {{"road", "Main St"}}));
    EXPECT_TRUE(eval(rule, {{"road", "N CENTRAL AVE"}}));
    EXPECT_TRUE(eval(rule, {{"road", "old mc 85 west"}}));
    EXPECT_TRUE(eval(rule, {{"road", "SR-74"}}));
    EXPECT_FALSE(eval(rule, {{"road", "Stanford Blvd"}}));
    EXPECT_FALSE(eval(rule, {{"road", "Avenida Rio"}}));
    EXPECT_FALSE(eval(rule, {{"road", "Mc 850"}}));
    EXPECT_FALSE(eval(rule, {{"road", "SR-740"}}));
}

TEST(Rule, DisjunctionOfConjunctions)
{
    std::string rule = "a in 1 && b is_null || c le 45";
    EXPECT_TRUE(eval(rule, {{"a", "1"}, {"b", ""}, {"c", "60"}}));
    EXPECT_FALSE(eval(rule, {{"a", "1"}, {"b", "x"}, {"c", "60"}}));
    EXPECT_TRUE(eval(rule, {{"a", "2"}, {"b", "x"}, {"c", "30"}}));
}

TEST(Rule, ConstantRules)
{
    EXPECT_FALSE(eval("none", {{"x", "1"}}));
    EXPECT_TRUE(eval("always", {{"x", "1"}}));
    EXPECT_TRUE(Rule::parse("none").is_never());
}

TEST(Rule, ParseErrors)
{
    EXPECT_THROW(Rule::parse("x"), SchemaError);
    EXPECT_THROW(Rule::parse("x within 1"), SchemaError);
    EXPECT_THROW(Rule::parse("x in"), SchemaError);
    EXPECT_THROW(Rule::parse("x le fast"), SchemaError);
}

TEST(Rule, BindNamesMissingColumn)
{
    csv::Table t({"a"}, {}, "crash.csv");
    try
    {
        Rule::parse("INT_HWY in 0").bind(t);
        FAIL();
    }
    catch (SchemaError const& e)
    {
        EXPECT_NE(std::string(e.what()).find("INT_HWY"), std::string::npos);
    }
}

TEST(Rule, ColumnsListed)
{
    auto cols = Rule::parse("a in 1 && b is_null || c le 45").columns();
    EXPECT_EQ(cols, (std::set<std::string>{"a", "b", "c"}));
}
