#include "oce/core/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace oce {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string &key, const std::string &v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception &) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

} // namespace

KeyValueConfig KeyValueConfig::parse(const std::string &text, const std::string &origin) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key.find('.') == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": key must be 'section.key'");
        }
        cfg.entries_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void KeyValueConfig::set(const std::string &key, const std::string &value) { entries_[key] = value; }

bool KeyValueConfig::has(const std::string &key) const { return entries_.count(key) != 0; }

std::optional<std::string> KeyValueConfig::raw(const std::string &key) const {
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    return std::nullopt;
}

std::string KeyValueConfig::get_string(const std::string &key, const std::string &fallback) const {
    return raw(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string &key, double fallback) const {
    const auto v = raw(key);
    return v ? parse_double(key, *v) : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string &key, std::int64_t fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    std::int64_t out = 0;
    const auto *end = v->data() + v->size();
    const auto res = std::from_chars(v->data(), end, out);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + *v + "'");
    }
    return out;
}

bool KeyValueConfig::get_bool(const std::string &key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<double> KeyValueConfig::get_list(const std::string &key,
                                             const std::vector<double> &fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    std::vector<double> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    return out;
}

std::vector<std::string> KeyValueConfig::keys_in(const std::set<std::string> &sections) const {
    std::vector<std::string> out;
    for (const auto &[k, v] : entries_) {
        if (sections.count(k.substr(0, k.find('.')))) out.push_back(k);
    }
    return out;
}

void KeyValueConfig::require_known(const std::set<std::string> &known) const {
    for (const auto &[k, v] : entries_) {
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }
}

} // namespace oce
