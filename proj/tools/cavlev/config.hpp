#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cavlev::cli {

/// INI-style configuration: `key = value` lines grouped under `[section]`
/// tables; `#` and `;` start comments. One file describes one scenario.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    std::optional<std::string> raw(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;

    /// Sorted (section, key, value) triples of everything that was set.
    std::vector<std::array<std::string, 3>> entries() const;

    void set(const std::string& section, const std::string& key, const std::string& value);

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Typed accessors that collect every offending field instead of failing fast.
class ConfigReader {
public:
    explicit ConfigReader(const Config& config) : config_(&config) {}

    double number(const std::string& section, const std::string& key, double fallback);
    double require_number(const std::string& section, const std::string& key);
    int integer(const std::string& section, const std::string& key, int fallback);
    std::string text(const std::string& section, const std::string& key,
                     const std::string& fallback);
    std::vector<double> number_list(const std::string& section, const std::string& key,
                                    const std::vector<double>& fallback);

    void fail(const std::string& message) { errors_.push_back(message); }
    const std::vector<std::string>& errors() const { return errors_; }

private:
    const Config* config_;
    std::vector<std::string> errors_;
};

} // namespace cavlev::cli
