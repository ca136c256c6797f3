#pragma once

// Flat "key = value" configuration files. Keys may carry dotted section
// prefixes (grid.t_min); '#' starts a comment. Every key a scenario reads is
// required and every key it does not read is an error.

#include <map>
#include <string>
#include <vector>

#include "lpsim/direct_integral.hpp"

namespace lpsim {

class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    void set(const std::string& key, const std::string& value);

    /// Raw value text, possibly empty.
    std::string get_text(const std::string& key) const;
    /// Non-empty value text.
    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    long get_int(const std::string& key) const;
    unsigned long long get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    /// Comma-separated reals; an empty value gives an empty list.
    std::vector<double> get_list(const std::string& key) const;
    /// Real square matrix, rows separated by ';' and entries by ','.
    CMatrix get_matrix(const std::string& key) const;

    /// Throws ConfigError naming the first key outside `allowed` or the first
    /// missing entry of `allowed`.
    void require_exactly(const std::vector<std::string>& allowed) const;
    int line_of(const std::string& key) const;

private:
    struct Entry {
        std::string value;
        int line;
    };
    const Entry& entry(const std::string& key) const;
    std::map<std::string, Entry> entries_;
};

}  // namespace lpsim
