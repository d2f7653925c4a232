#pragma once

/*
 * Plain-text key-value files used for schema specs, run configs, and
 * population specs.
 *
 *   # comment
 *   key = value
 *   [section]            # following keys become "section.key"
 *   long.key = a, b, \   # trailing backslash continues the value
 *              c
 *
 * Keys are unique; a repeated key is an error.
 */

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crashbench/csv.hpp"
#include "crashbench/model.hpp"
#include "crashbench/text.hpp"

namespace crashbench
{
class KeyValueFile
{
  public:
    KeyValueFile() = default;

    static KeyValueFile parse(std::string_view text, std::string origin = {})
    {
        KeyValueFile kv;
        kv.origin_ = std::move(origin);
        std::string section;
        std::string pending_key;
        std::string pending_value;
        bool continuing = false;
        std::size_t lineno = 0;

        auto commit = [&](std::size_t at) {
            if (kv.values_.count(pending_key))
                throw SchemaError(kv.where(at) + "duplicate key '"
                                  + pending_key + "'");
            kv.values_.emplace(pending_key, std::string(trim(pending_value)));
            kv.order_.push_back(pending_key);
        };

        std::size_t start = 0;
        while (start <= text.size())
        {
            auto nl = text.find('\n', start);
            auto raw = text.substr(start, nl == std::string_view::npos
                                              ? std::string_view::npos
                                              : nl - start);
            start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
            ++lineno;

            std::string line = strip_comment(raw);
            auto t = trim(line);
            if (continuing)
            {
                bool more = !t.empty() && t.back() == '\\';
                if (more)
                    t.remove_suffix(1);
                pending_value += ' ';
                pending_value += trim(t);
                if (!more)
                {
                    continuing = false;
                    commit(lineno);
                }
                continue;
            }
            if (t.empty())
                continue;
            if (t.front() == '[')
            {
                if (t.back() != ']')
                    throw SchemaError(kv.where(lineno) + "malformed section header");
                section = std::string(trim(t.substr(1, t.size() - 2)));
                continue;
            }
            auto eq = t.find('=');
            if (eq == std::string_view::npos)
                throw SchemaError(kv.where(lineno) + "expected 'key = value'");
            auto key = std::string(trim(t.substr(0, eq)));
            if (key.empty())
                throw SchemaError(kv.where(lineno) + "empty key");
            pending_key = section.empty() ? key : section + "." + key;
            auto value = trim(t.substr(eq + 1));
            if (!value.empty() && value.back() == '\\')
            {
                value.remove_suffix(1);
                pending_value = std::string(trim(value));
                continuing = true;
                continue;
            }
            pending_value = std::string(value);
            commit(lineno);
        }
        if (continuing)
            throw SchemaError(kv.where(lineno) + "continuation at end of file");
        return kv;
    }

    static KeyValueFile read(std::string const& path)
    {
        return parse(csv::read_file(path), path);
    }

    bool has(std::string const& key) const { return values_.count(key) != 0; }

    std::optional<std::string> get(std::string const& key) const
    {
        auto it = values_.find(key);
        if (it == values_.end())
            return std::nullopt;
        return it->second;
    }

    std::string require(std::string const& key) const
    {
        auto v = get(key);
        if (!v)
            throw SchemaError(where(0) + "missing required key '" + key + "'");
        return *v;
    }

    std::string get_or(std::string const& key, std::string fallback) const
    {
        auto v = get(key);
        return v ? *v : std::move(fallback);
    }

    double require_number(std::string const& key) const
    {
        auto v = parse_number(require(key));
        if (!v)
            throw SchemaError(where(0) + "key '" + key + "' is not a number");
        return *v;
    }

    double number_or(std::string const& key, double fallback) const
    {
        if (!has(key))
            return fallback;
        return require_number(key);
    }

    bool bool_or(std::string const& key, bool fallback) const
    {
        auto v = get(key);
        if (!v)
            return fallback;
        auto s = to_lower(*v);
        if (s == "true" || s == "yes" || s == "1")
            return true;
        if (s == "false" || s == "no" || s == "0")
            return false;
        throw SchemaError(where(0) + "key '" + key + "' is not a boolean");
    }

    //! Keys starting with "prefix." in file order.
    std::vector<std::string> keys_with_prefix(std::string const& prefix) const
    {
        std::vector<std::string> out;
        auto p = prefix + ".";
        for (auto const& k : order_)
        {
            if (k.rfind(p, 0) == 0)
                out.push_back(k);
        }
        return out;
    }

    std::vector<std::string> const& keys() const { return order_; }

    void set(std::string const& key, std::string value)
    {
        if (!values_.count(key))
            order_.push_back(key);
        values_[key] = std::move(value);
    }

    std::string const& origin() const { return origin_; }

  private:
    static std::string strip_comment(std::string_view raw)
    {
        // '#' starts a comment unless inside double quotes.
        std::string out;
        bool quoted = false;
        for (char c : raw)
        {
            if (c == '"')
                quoted = !quoted;
            if (c == '#' && !quoted)
                break;
            out.push_back(c);
        }
        if (!out.empty() && out.back() == '\r')
            out.pop_back();
        return out;
    }

    std::string where(std::size_t line) const
    {
        std::string s = origin_.empty() ? std::string("key-value file")
                                        : origin_;
        if (line)
            s += ":" + std::to_string(line);
        return s + ": ";
    }

    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
    std::string origin_;
};

}  // namespace crashbench
