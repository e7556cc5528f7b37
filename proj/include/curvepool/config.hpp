#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "curvepool/errors.hpp"

namespace curvepool {

// Flat `key = value` text, UTF-8, '#' comments. Used for model descriptions
// and run manifests; trivially diffable.
class FlatConfig {
public:
    FlatConfig() = default;

    static FlatConfig parse(std::istream& in, const std::string& origin = "<config>") {
        FlatConfig cfg;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ParseError(origin + " line " + std::to_string(lineno) +
                                 ": expected 'key = value'");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ParseError(origin + " line " + std::to_string(lineno) + ": empty key");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static FlatConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open '" + path.string() + "'");
        return parse(in, path.string());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get(const std::string& key, const std::string& fallback = "") const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        return to_double(key, it->second);
    }

    double require_double(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ParseError("config: missing key '" + key + "'");
        return to_double(key, it->second);
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static double to_double(const std::string& key, const std::string& value) {
        try {
            std::size_t used = 0;
            const double x = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            return x;
        } catch (const std::exception&) {
            throw ParseError("config: key '" + key + "' has non-numeric value '" + value + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

} // namespace curvepool
