#include "config.hpp"

#include <array>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cavlev::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

} // namespace

Config Config::parse_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str());
}

Config Config::parse_string(const std::string& text)
{
    Config config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos)
            line = line.substr(0, comment);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(line_number) +
                                         ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_number) +
                                     ": expected key = value");
        config.set(section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value)
{
    sections_[section][key] = value;
}

std::optional<std::string> Config::raw(const std::string& section, const std::string& key) const
{
    const auto sec = sections_.find(section);
    if (sec == sections_.end())
        return std::nullopt;
    const auto it = sec->second.find(key);
    if (it == sec->second.end())
        return std::nullopt;
    return it->second;
}

bool Config::has_section(const std::string& section) const
{
    return sections_.count(section) > 0;
}

std::vector<std::array<std::string, 3>> Config::entries() const
{
    std::vector<std::array<std::string, 3>> result;
    for (const auto& [section, table] : sections_)
        for (const auto& [key, value] : table)
            result.push_back({section, key, value});
    return result;
}

double ConfigReader::number(const std::string& section, const std::string& key, double fallback)
{
    const auto value = config_->raw(section, key);
    if (!value)
        return fallback;
    char* end = nullptr;
    const double parsed = std::strtod(value->c_str(), &end);
    if (end == value->c_str() || *end != '\0') {
        fail("[" + section + "] " + key + ": not a number: '" + *value + "'");
        return fallback;
    }
    return parsed;
}

double ConfigReader::require_number(const std::string& section, const std::string& key)
{
    if (!config_->raw(section, key)) {
        fail("[" + section + "] " + key + ": required field missing");
        return 0.0;
    }
    return number(section, key, 0.0);
}

int ConfigReader::integer(const std::string& section, const std::string& key, int fallback)
{
    const double v = number(section, key, static_cast<double>(fallback));
    return static_cast<int>(v);
}

std::string ConfigReader::text(const std::string& section, const std::string& key,
                               const std::string& fallback)
{
    const auto value = config_->raw(section, key);
    return value ? *value : fallback;
}

std::vector<double> ConfigReader::number_list(const std::string& section, const std::string& key,
                                              const std::vector<double>& fallback)
{
    const auto value = config_->raw(section, key);
    if (!value)
        return fallback;
    std::vector<double> out;
    std::istringstream in(*value);
    std::string item;
    while (std::getline(in, item, ',')) {
        char* end = nullptr;
        const double parsed = std::strtod(item.c_str(), &end);
        if (end == item.c_str()) {
            fail("[" + section + "] " + key + ": not a number list: '" + *value + "'");
            return fallback;
        }
        out.push_back(parsed);
    }
    if (out.empty())
        fail("[" + section + "] " + key + ": empty list");
    return out;
}

} // namespace cavlev::cli
