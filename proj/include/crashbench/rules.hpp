#pragma once

/*
 * Declarative row predicates for schema specs.
 *
 * A rule is a disjunction of clauses, each clause a conjunction of
 * predicates:
 *
 *   BODY_TYP in 1:17, 19:25, 28:42, 45:49
 *   party_type in 1 && stwd_vehicle_type is_null && chp_veh_type_towing is_null
 *   GeocodeOnRoad has_token Ave, St, "Mc 85" || PostedSpeed le 45
 *
 * Operators: in, not_in, eq, le, lt, ge, gt, is_null, not_null, has_token.
 * Code lists accept numeric ranges "a:b" (inclusive) and literal codes;
 * literals containing spaces or commas are double-quoted. The rule texts
 * "none" and "always" are the constant predicates.
 *
 * A blank field, or the literal NULL, is null. Null fields never satisfy
 * in / not_in / comparisons / has_token.
 */

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "crashbench/csv.hpp"
#include "crashbench/model.hpp"
#include "crashbench/text.hpp"

namespace crashbench
{
inline bool is_null_field(std::string_view v)
{
    auto t = trim(v);
    return t.empty() || iequals(t, "null") || iequals(t, "na");
}

//---------------------------------------------------------------------------//
/*!
 * Set of raw codes: inclusive numeric ranges plus literal strings.
 */
class CodeSet
{
  public:
    struct Range
    {
        double lo;
        double hi;
    };

    CodeSet() = default;

    //! Parse "1:17, 19:25, 98" or "A, B, \"Mc 85\"".
    static CodeSet parse(std::string_view text)
    {
        CodeSet set;
        for (auto const& item : split_quoted(text))
        {
            if (item.quoted)
            {
                set.literals_.push_back(item.text);
                continue;
            }
            auto colon = item.text.find(':');
            if (colon != std::string::npos)
            {
                auto lo = parse_number(item.text.substr(0, colon));
                auto hi = parse_number(item.text.substr(colon + 1));
                if (!lo || !hi || *lo > *hi)
                    throw SchemaError("malformed code range '" + item.text + "'");
                set.ranges_.push_back({*lo, *hi});
            }
            else if (auto n = parse_number(item.text))
            {
                set.ranges_.push_back({*n, *n});
            }
            else
            {
                set.literals_.push_back(item.text);
            }
        }
        return set;
    }

    bool contains(std::string_view raw) const
    {
        auto t = trim(raw);
        if (!ranges_.empty())
        {
            if (auto n = parse_number(t))
            {
                for (auto const& r : ranges_)
                {
                    if (*n >= r.lo && *n <= r.hi)
                        return true;
                }
            }
        }
        for (auto const& lit : literals_)
        {
            if (iequals(lit, t))
                return true;
        }
        return false;
    }

    bool empty() const { return ranges_.empty() && literals_.empty(); }

    std::vector<Range> const& ranges() const { return ranges_; }
    std::vector<std::string> const& literals() const { return literals_; }

    //! True when no raw value can belong to both sets.
    bool disjoint_from(CodeSet const& other) const
    {
        for (auto const& a : ranges_)
            for (auto const& b : other.ranges_)
                if (a.lo <= b.hi && b.lo <= a.hi)
                    return false;
        for (auto const& a : literals_)
        {
            if (other.contains(a))
                return false;
        }
        for (auto const& b : other.literals_)
        {
            if (contains(b))
                return false;
        }
        return true;
    }

    struct Item
    {
        std::string text;
        bool quoted = false;
    };

    //! Comma-separated items; double quotes protect commas and spaces.
    static std::vector<Item> split_quoted(std::string_view text)
    {
        std::vector<Item> out;
        Item cur;
        bool in_quotes = false;
        bool any = false;
        auto flush = [&] {
            if (!cur.quoted)
                cur.text = std::string(trim(cur.text));
            if (!cur.text.empty() || cur.quoted)
                out.push_back(cur);
            cur = Item{};
        };
        for (char c : text)
        {
            any = true;
            if (c == '"')
            {
                if (!cur.quoted && !trim(cur.text).empty())
                    throw SchemaError("text before opening quote in code list");
                if (!cur.quoted)
                    cur.text.clear();
                in_quotes = !in_quotes;
                cur.quoted = true;
                continue;
            }
            if (c == ',' && !in_quotes)
            {
                flush();
                continue;
            }
            if (!in_quotes && cur.quoted && !std::isspace(static_cast<unsigned char>(c)))
                throw SchemaError("text after closing quote in code list");
            if (in_quotes || !cur.quoted)
                cur.text.push_back(c);
        }
        if (in_quotes)
            throw SchemaError("unterminated quote in code list");
        if (any)
            flush();
        return out;
    }

  private:
    std::vector<Range> ranges_;
    std::vector<std::string> literals_;
};

//---------------------------------------------------------------------------//
// Predicates
//---------------------------------------------------------------------------//

enum class PredicateOp
{
    In,
    NotIn,
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
    IsNull,
    NotNull,
    HasToken
};

struct Predicate
{
    std::string column;
    PredicateOp op = PredicateOp::In;
    CodeSet codes;
    double threshold = 0;
    //! Each phrase is a sequence of lower-case word tokens.
    std::vector<std::vector<std::string>> phrases;

    bool matches(std::string_view raw) const
    {
        if (op == PredicateOp::IsNull)
            return is_null_field(raw);
        if (op == PredicateOp::NotNull)
            return !is_null_field(raw);
        if (is_null_field(raw))
            return false;
        switch (op)
        {
            case PredicateOp::In:
            case PredicateOp::Eq:
                return codes.contains(raw);
            case PredicateOp::NotIn:
                return !codes.contains(raw);
            case PredicateOp::Le:
            case PredicateOp::Lt:
            case PredicateOp::Ge:
            case PredicateOp::Gt: {
                auto n = parse_number(raw);
                if (!n)
                    return false;
                if (op == PredicateOp::Le)
                    return *n <= threshold;
                if (op == PredicateOp::Lt)
                    return *n < threshold;
                if (op == PredicateOp::Ge)
                    return *n >= threshold;
                return *n > threshold;
            }
            case PredicateOp::HasToken:
                return has_phrase(word_tokens(raw));
            default:
                return false;
        }
    }

  private:
    bool has_phrase(std::vector<std::string> const& tokens) const
    {
        for (auto const& phrase : phrases)
        {
            if (phrase.empty() || phrase.size() > tokens.size())
                continue;
            for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i)
            {
                bool ok = true;
                for (std::size_t j = 0; j < phrase.size() && ok; ++j)
                    ok = tokens[i + j] == phrase[j];
                if (ok)
                    return true;
            }
        }
        return false;
    }
};

//---------------------------------------------------------------------------//
/*!
 * Disjunction of conjunctions of predicates over named columns.
 */
class Rule
{
  public:
    using Clause = std::vector<Predicate>;

    Rule() = default;

    static Rule never() { return Rule{}; }
    static Rule always()
    {
        Rule r;
        r.clauses_.push_back({});
        return r;
    }

    static Rule parse(std::string_view text)
    {
        auto t = trim(text);
        if (iequals(t, "none"))
            return never();
        if (iequals(t, "always"))
            return always();
        Rule rule;
        for (auto const& clause_text : split_outside_quotes(t, "||"))
        {
            Clause clause;
            for (auto const& pred_text : split_outside_quotes(clause_text, "&&"))
                clause.push_back(parse_predicate(pred_text));
            if (clause.empty())
                throw SchemaError("empty clause in rule '" + std::string(t) + "'");
            rule.clauses_.push_back(std::move(clause));
        }
        if (rule.clauses_.empty())
            throw SchemaError("empty rule text");
        return rule;
    }

    bool is_never() const { return clauses_.empty(); }

    std::set<std::string> columns() const
    {
        std::set<std::string> out;
        for (auto const& c : clauses_)
            for (auto const& p : c)
                out.insert(p.column);
        return out;
    }

    std::vector<Clause> const& clauses() const { return clauses_; }

    //! Rule with column indices resolved against a table header.
    class Bound
    {
      public:
        bool operator()(std::vector<std::string> const& row) const
        {
            for (auto const& clause : clauses_)
            {
                bool ok = true;
                for (auto const& [index, pred] : clause)
                {
                    if (!pred->matches(row[index]))
                    {
                        ok = false;
                        break;
                    }
                }
                if (ok)
                    return true;
            }
            return false;
        }

      private:
        friend class Rule;
        std::vector<std::vector<std::pair<std::size_t, Predicate const*>>> clauses_;
    };

    //! Resolve columns; throws SchemaError naming any missing column.
    Bound bind(csv::Table const& table) const
    {
        Bound b;
        for (auto const& clause : clauses_)
        {
            std::vector<std::pair<std::size_t, Predicate const*>> bc;
            for (auto const& p : clause)
                bc.emplace_back(table.column(p.column), &p);
            b.clauses_.push_back(std::move(bc));
        }
        return b;
    }

  private:
    static std::vector<std::string> split_outside_quotes(std::string_view s,
                                                         std::string_view sep)
    {
        std::vector<std::string> out;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i)
        {
            if (s[i] == '"')
                quoted = !quoted;
            if (!quoted && s.substr(i, sep.size()) == sep)
            {
                out.emplace_back(trim(cur));
                cur.clear();
                i += sep.size() - 1;
                continue;
            }
            cur.push_back(s[i]);
        }
        out.emplace_back(trim(cur));
        return out;
    }

    static Predicate parse_predicate(std::string_view text)
    {
        auto t = trim(text);
        auto sp = t.find_first_of(" \t");
        if (sp == std::string_view::npos)
            throw SchemaError("malformed predicate '" + std::string(t) + "'");
        Predicate p;
        p.column = std::string(t.substr(0, sp));
        auto rest = trim(t.substr(sp));
        auto sp2 = rest.find_first_of(" \t");
        auto op = std::string(rest.substr(0, sp2));
        auto args = sp2 == std::string_view::npos ? std::string_view{}
                                                  : trim(rest.substr(sp2));
        auto need_args = [&] {
            if (args.empty())
                throw SchemaError("predicate '" + std::string(t)
                                  + "' needs arguments");
        };
        auto need_number = [&]() -> double {
            need_args();
            auto n = parse_number(args);
            if (!n)
                throw SchemaError("predicate '" + std::string(t)
                                  + "' needs a numeric threshold");
            return *n;
        };
        if (op == "in" || op == "eq")
        {
            need_args();
            p.op = op == "in" ? PredicateOp::In : PredicateOp::Eq;
            p.codes = CodeSet::parse(args);
        }
        else if (op == "not_in")
        {
            need_args();
            p.op = PredicateOp::NotIn;
            p.codes = CodeSet::parse(args);
        }
        else if (op == "le") { p.op = PredicateOp::Le; p.threshold = need_number(); }
        else if (op == "lt") { p.op = PredicateOp::Lt; p.threshold = need_number(); }
        else if (op == "ge") { p.op = PredicateOp::Ge; p.threshold = need_number(); }
        else if (op == "gt") { p.op = PredicateOp::Gt; p.threshold = need_number(); }
        else if (op == "is_null") { p.op = PredicateOp::IsNull; }
        else if (op == "not_null") { p.op = PredicateOp::NotNull; }
        else if (op == "has_token")
        {
            need_args();
            p.op = PredicateOp::HasToken;
            for (auto const& item : CodeSet::split_quoted(args))
                p.phrases.push_back(word_tokens(item.text));
        }
        else
        {
            throw SchemaError("unknown predicate operator '" + op + "'");
        }
        return p;
    }

    std::vector<Clause> clauses_;
};

}  // namespace crashbench
