#include "magweyl/config.hpp"
#include "magweyl/errors.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace magweyl {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), errc::io_error, "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    load_text(ss.str(), path);
}

void Config::load_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        require(eq != std::string::npos, errc::config_error,
                origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        require(!key.empty(), errc::config_error,
                origin + ":" + std::to_string(lineno) + ": empty key");
        kv_[key] = value;
    }
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

bool Config::has(const std::string& key) const { return kv_.count(key) != 0; }

std::string Config::str(const std::string& key) const {
    auto it = kv_.find(key);
    require(it != kv_.end(), errc::config_error, "missing config key '" + key + "'");
    return it->second;
}

std::string Config::str(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double Config::num(const std::string& key) const {
    const std::string v = str(key);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    require(end && *end == '\0' && end != v.c_str(), errc::config_error,
            "config key '" + key + "' is not a number: '" + v + "'");
    return x;
}

double Config::num(const std::string& key, double fallback) const {
    return has(key) ? num(key) : fallback;
}

long long Config::integer(const std::string& key) const {
    const std::string v = str(key);
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    require(end && *end == '\0' && end != v.c_str(), errc::config_error,
            "config key '" + key + "' is not an integer: '" + v + "'");
    return x;
}

long long Config::integer(const std::string& key, long long fallback) const {
    return has(key) ? integer(key) : fallback;
}

bool Config::flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string v = str(key);
    for (auto& c : v) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    fail(errc::config_error, "config key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<double> Config::numbers(const std::string& key) const {
    std::string v = str(key);
    for (auto& c : v)
        if (c == ',') c = ' ';
    std::istringstream in(v);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        char* end = nullptr;
        double x = std::strtod(tok.c_str(), &end);
        require(end && *end == '\0' && end != tok.c_str(), errc::config_error,
                "config key '" + key + "' has a non-numeric entry: '" + tok + "'");
        out.push_back(x);
    }
    require(!out.empty(), errc::config_error, "config key '" + key + "' is an empty list");
    return out;
}

std::vector<double> Config::numbers(const std::string& key, std::vector<double> fallback) const {
    return has(key) ? numbers(key) : fallback;
}

std::vector<std::string> Config::keys() const {
    std::vector<std::string> out;
    out.reserve(kv_.size());
    for (const auto& [k, v] : kv_) out.push_back(k);
    return out;
}

std::string Config::dump() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    }
    return out;
}

} // namespace magweyl
