#ifndef STORMBO_CONFIG_HPP
#define STORMBO_CONFIG_HPP

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "stormbo/types.hpp"

namespace stormbo {

/// One `[name label]` section of a config file with its key = value pairs.
struct ConfigSection {
    std::string name;
    std::string label;
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const { return values.count(key) > 0; }
    std::string get_str(const std::string& key, const std::string& fallback = "") const;
    std::string require_str(const std::string& key) const;
    double get_num(const std::string& key, double fallback) const;
    double require_num(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;
};

/// Plain-text key-value config with nested `[section]` blocks. `#` and `;`
/// start comments; section names may carry a label: `[node basin_3]`.
struct ConfigFile {
    std::vector<ConfigSection> sections;

    static ConfigFile parse(std::istream& in, const std::string& origin = "<stream>");
    static ConfigFile load(const std::string& path);

    const ConfigSection* find(const std::string& name) const;
    const ConfigSection& require(const std::string& name) const;
    std::vector<const ConfigSection*> all(const std::string& name) const;
};

} // namespace stormbo

#endif
