#pragma once

// Provenance blocks: tool version, config hash, and input digests.

#include <array>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "crashbench/csv.hpp"
#include "crashbench/model.hpp"

namespace crashbench
{
inline constexpr char const* kToolVersion = "crashbench 0.1.0";

inline std::string sha256_hex(std::string_view data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i)
    {
        std::snprintf(buf, sizeof(buf), "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

inline std::string sha256_file(std::string const& path)
{
    return sha256_hex(csv::read_file(path));
}

struct Provenance
{
    std::string tool = kToolVersion;
    std::string config_sha256;
    //! Input path -> SHA-256 of its bytes.
    std::map<std::string, std::string> inputs;

    //! Hash of the resolved configuration, one "key=value" per line in key order.
    void set_config(std::map<std::string, std::string> const& resolved)
    {
        std::string canonical;
        for (auto const& [k, v] : resolved)
            canonical += k + "=" + v + "\n";
        config_sha256 = sha256_hex(canonical);
    }

    void add_input(std::string const& path) { inputs[path] = sha256_file(path); }

    //! '#' comment lines placed ahead of CSV output.
    std::string csv_preamble() const
    {
        std::string s = "# tool: " + tool + "\n";
        s += "# config_sha256: " + config_sha256 + "\n";
        for (auto const& [path, digest] : inputs)
            s += "# input: " + path + " sha256=" + digest + "\n";
        return s;
    }

    nlohmann::json json() const
    {
        return {{"tool", tool}, {"config_sha256", config_sha256}, {"inputs", inputs}};
    }
};

}  // namespace crashbench
