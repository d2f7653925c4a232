#pragma once

// RFC-4180 CSV reading and writing.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "crashbench/model.hpp"

namespace crashbench::csv
{
//! Parsed CSV: a header row plus data rows of the same width.
class Table
{
  public:
    Table() = default;
    Table(std::vector<std::string> header,
          std::vector<std::vector<std::string>> rows,
          std::string origin = {})
        : header_(std::move(header)), rows_(std::move(rows)),
          origin_(std::move(origin))
    {
        for (std::size_t i = 0; i < header_.size(); ++i)
            index_.emplace(header_[i], i);
    }

    std::vector<std::string> const& header() const { return header_; }
    std::vector<std::vector<std::string>> const& rows() const
    {
        return rows_;
    }
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    std::string const& origin() const { return origin_; }

    bool has_column(std::string const& name) const
    {
        return index_.count(name) != 0;
    }

    //! Column index, or a SchemaError naming the missing column.
    std::size_t column(std::string const& name) const
    {
        auto it = index_.find(name);
        if (it == index_.end())
        {
            throw SchemaError("missing column '" + name + "'"
                              + (origin_.empty() ? "" : " in " + origin_));
        }
        return it->second;
    }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::map<std::string, std::size_t> index_;
    std::string origin_;
};

struct ReadOptions
{
    //! Skip leading lines starting with '#' (provenance blocks).
    bool skip_comment_preamble = true;
};

/*!
 * Parse CSV text. Quoted fields may contain delimiters, doubled quotes, and
 * line breaks. Both LF and CRLF line endings are accepted.
 */
inline Table parse(std::string_view text,
                   std::string origin = {},
                   ReadOptions opts = {})
{
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF")
        text.remove_prefix(3);
    if (opts.skip_comment_preamble)
    {
        while (!text.empty() && text.front() == '#')
        {
            auto nl = text.find('\n');
            text.remove_prefix(nl == std::string_view::npos ? text.size()
                                                            : nl + 1);
        }
    }

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // A physically blank line is not a record.
        if (!(record.size() == 1 && record.front().empty()))
            records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i)
    {
        char c = text[i];
        if (in_quotes)
        {
            if (c == '"')
            {
                if (i + 1 < text.size() && text[i + 1] == '"')
                {
                    field.push_back('"');
                    ++i;
                }
                else
                {
                    in_quotes = false;
                }
            }
            else
            {
                if (c == '\n')
                    ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c)
        {
            case '"':
                if (field_started && !field.empty())
                {
                    throw SchemaError("stray quote in unquoted field at line "
                                      + std::to_string(line)
                                      + (origin.empty() ? "" : " of " + origin));
                }
                in_quotes = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n')
                    break;
                end_record();
                ++line;
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (in_quotes)
    {
        throw SchemaError("unterminated quoted field"
                          + (origin.empty() ? "" : " in " + origin));
    }
    if (field_started || !field.empty() || !record.empty())
        end_record();

    // A zero-length file is an empty table without a header.
    if (records.empty())
        return Table({}, {}, std::move(origin));
    auto header = std::move(records.front());
    for (auto& h : header)
        h = std::string(trim(h));
    records.erase(records.begin());
    for (std::size_t r = 0; r < records.size(); ++r)
    {
        if (records[r].size() != header.size())
        {
            throw SchemaError("row " + std::to_string(r + 1) + " has "
                              + std::to_string(records[r].size())
                              + " fields, header has "
                              + std::to_string(header.size())
                              + (origin.empty() ? "" : " in " + origin));
        }
    }
    return Table(std::move(header), std::move(records), std::move(origin));
}

inline std::string read_file(std::string const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot open file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Table read(std::string const& path, ReadOptions opts = {})
{
    return parse(read_file(path), path, opts);
}

//! Quote a field only when it needs quoting.
inline std::string escape(std::string_view field)
{
    bool needs = field.find_first_of(",\"\r\n") != std::string_view::npos
                 || (!field.empty()
                     && (field.front() == ' ' || field.back() == ' '));
    if (!needs)
        return std::string(field);
    std::string out = "\"";
    for (char c : field)
    {
        if (c == '"')
            out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

//! Accumulates rows and renders them with LF line endings.
class Writer
{
  public:
    explicit Writer(std::vector<std::string> header)
        : width_(header.size())
    {
        append(header);
    }

    void row(std::vector<std::string> const& fields)
    {
        if (fields.size() != width_)
            throw std::logic_error("CSV row width does not match header");
        append(fields);
    }

    std::string const& str() const { return out_; }

  private:
    void append(std::vector<std::string> const& fields)
    {
        for (std::size_t i = 0; i < fields.size(); ++i)
        {
            if (i)
                out_.push_back(',');
            out_ += escape(fields[i]);
        }
        out_.push_back('\n');
    }

    std::size_t width_;
    std::string out_;
};

}  // namespace crashbench::csv
