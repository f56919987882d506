#pragma once

#include <map>
#include <string>
#include <vector>

namespace magweyl {

// Layered key = value configuration. '#' starts a comment, blank lines are
// skipped, later layers (files, inline text, --set overrides) win.
class Config {
public:
    void load_file(const std::string& path);
    void load_text(const std::string& text, const std::string& origin = "<inline>");
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;

    std::string str(const std::string& key) const;
    std::string str(const std::string& key, const std::string& fallback) const;
    double num(const std::string& key) const;
    double num(const std::string& key, double fallback) const;
    long long integer(const std::string& key) const;
    long long integer(const std::string& key, long long fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    // comma or whitespace separated list
    std::vector<double> numbers(const std::string& key) const;
    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;

    std::vector<std::string> keys() const;
    std::string dump() const; // sorted key = value lines

private:
    std::map<std::string, std::string> kv_;
};

} // namespace magweyl
