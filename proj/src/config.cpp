#include "lpsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lpsim/errors.hpp"

namespace lpsim {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    return std::all_of(key.begin(), key.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-';
    });
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

double parse_double(const std::string& text, const std::string& key, int line) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (text.empty() || res.ec != std::errc() || res.ptr != end) {
        throw ConfigError("key '" + key + "': expected a number, got '" + text + "'", line);
    }
    return v;
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        const std::string key = trim(body.substr(0, eq));
        if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'", line);
        if (cfg.entries_.count(key)) {
            throw ConfigError("duplicate key '" + key + "' (first set on line " +
                                  std::to_string(cfg.entries_.at(key).line) + ")",
                              line);
        }
        cfg.entries_.emplace(key, Entry{trim(body.substr(eq + 1)), line});
    }
    return cfg;
}

Config Config::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
    auto it = entries_.find(key);
    if (it == entries_.end()) {
        entries_.emplace(key, Entry{value, 0});
    } else {
        it->second.value = value;
    }
}

const Config::Entry& Config::entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
}

int Config::line_of(const std::string& key) const { return has(key) ? entries_.at(key).line : 0; }

std::string Config::get_text(const std::string& key) const { return entry(key).value; }

std::string Config::get_string(const std::string& key) const {
    const Entry& e = entry(key);
    if (e.value.empty()) throw ConfigError("key '" + key + "' is empty", e.line);
    return e.value;
}

double Config::get_double(const std::string& key) const {
    const Entry& e = entry(key);
    return parse_double(e.value, key, e.line);
}

long Config::get_int(const std::string& key) const {
    const Entry& e = entry(key);
    long v = 0;
    const char* end = e.value.data() + e.value.size();
    const auto res = std::from_chars(e.value.data(), end, v);
    if (e.value.empty() || res.ec != std::errc() || res.ptr != end) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + e.value + "'", e.line);
    }
    return v;
}

unsigned long long Config::get_u64(const std::string& key) const {
    const Entry& e = entry(key);
    unsigned long long v = 0;
    const char* end = e.value.data() + e.value.size();
    const auto res = std::from_chars(e.value.data(), end, v);
    if (e.value.empty() || res.ec != std::errc() || res.ptr != end) {
        throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + e.value + "'", e.line);
    }
    return v;
}

bool Config::get_bool(const std::string& key) const {
    const Entry& e = entry(key);
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ConfigError("key '" + key + "': expected true or false, got '" + e.value + "'", e.line);
}

std::vector<double> Config::get_list(const std::string& key) const {
    const Entry& e = entry(key);
    std::vector<double> out;
    if (e.value.empty()) return out;
    for (const std::string& item : split(e.value, ',')) out.push_back(parse_double(item, key, e.line));
    return out;
}

CMatrix Config::get_matrix(const std::string& key) const {
    const Entry& e = entry(key);
    const std::vector<std::string> rows = split(e.value, ';');
    const auto n = static_cast<Eigen::Index>(rows.size());
    CMatrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const std::vector<std::string> cells = split(rows[static_cast<std::size_t>(r)], ',');
        if (static_cast<Eigen::Index>(cells.size()) != n) {
            throw ConfigError("key '" + key + "': matrix must be square (rows ';', entries ',')", e.line);
        }
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = parse_double(cells[static_cast<std::size_t>(c)], key, e.line);
    }
    return m;
}

void Config::require_exactly(const std::vector<std::string>& allowed) const {
    for (const auto& [key, e] : entries_) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown key '" + key + "' for this scenario", e.line);
        }
    }
    for (const std::string& key : allowed) {
        if (!has(key)) throw ConfigError("missing required key '" + key + "'");
    }
}

}  // namespace lpsim
