#pragma once

// CSV output: header row, comma separators, LF line endings and shortest
// round-trip decimal formatting of doubles.

#include <initializer_list>
#include <string>
#include <vector>

namespace lpsim {

/// Shortest decimal string that parses back to exactly x.
std::string format_double(double x);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void row(const std::vector<double>& values);
    void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }
    /// Mixed text and numbers, already formatted.
    void text_row(const std::vector<std::string>& cells);

    std::size_t rows() const noexcept { return rows_; }
    const std::string& str() const noexcept { return out_; }
    void save(const std::string& path) const;

private:
    std::size_t columns_;
    std::size_t rows_ = 0;
    std::string out_;
};

}  // namespace lpsim
