#include "stormbo/config.hpp"

#include <fstream>
#include <sstream>

namespace stormbo {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

std::string ConfigSection::get_str(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

std::string ConfigSection::require_str(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
        throw ConfigError("[" + name + (label.empty() ? "" : " " + label) + "] missing key '" +
                          key + "'");
    return it->second;
}

double ConfigSection::get_num(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' in [" + name + "] is not a number: '" +
                          it->second + "'");
    }
}

double ConfigSection::require_num(const std::string& key) const {
    require_str(key);
    return get_num(key, 0.0);
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "' in [" + name + "] is not a boolean: '" + v + "'");
}

ConfigFile ConfigFile::parse(std::istream& in, const std::string& origin) {
    ConfigFile cfg;
    std::string line;
    int lineno = 0;
    ConfigSection* current = nullptr;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": unterminated section header");
            std::istringstream hdr(line.substr(1, line.size() - 2));
            ConfigSection sec;
            hdr >> sec.name;
            std::string rest;
            std::getline(hdr, rest);
            sec.label = trim(rest);
            if (sec.name.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            cfg.sections.push_back(std::move(sec));
            current = &cfg.sections.back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (current == nullptr)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        current->values[key] = value;
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in, path);
}

const ConfigSection* ConfigFile::find(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

const ConfigSection& ConfigFile::require(const std::string& name) const {
    const ConfigSection* s = find(name);
    if (s == nullptr) throw ConfigError("missing required section [" + name + "]");
    return *s;
}

std::vector<const ConfigSection*> ConfigFile::all(const std::string& name) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections)
        if (s.name == name) out.push_back(&s);
    return out;
}

} // namespace stormbo
