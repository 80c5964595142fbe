#pragma once

#include <charconv>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oos/dataset.hpp"
#include "oos/errors.hpp"

namespace oos {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Reads the `source,value` CSV format: a literal header line, then one
/// observation per row with the source as a string label. Format problems
/// throw CsvFormatError with the offending line number; the grouped records
/// then go through dataset_from_records, so domain violations (single source,
/// non-finite values, ...) surface as the usual dataset errors.
inline MultiSourceDataset read_dataset_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw CsvFormatError("empty file: missing 'source,value' header");
    ++line_no;
    std::string_view header = detail::trim(line);
    if (header.substr(0, 3) == "\xEF\xBB\xBF") header.remove_prefix(3);  // UTF-8 BOM
    if (header != "source,value")
        throw CsvFormatError("line 1: expected header 'source,value', got '" + std::string(header) +
                             "'");

    std::vector<std::pair<SourceLabel, double>> records;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view row = detail::trim(line);
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string_view::npos)
            throw CsvFormatError("line " + std::to_string(line_no) + ": expected 'source,value'");
        const std::string_view label = detail::trim(row.substr(0, comma));
        const std::string_view value_text = detail::trim(row.substr(comma + 1));
        if (label.empty())
            throw CsvFormatError("line " + std::to_string(line_no) + ": empty source label");
        if (value_text.find(',') != std::string_view::npos)
            throw CsvFormatError("line " + std::to_string(line_no) + ": too many fields");
        double value = 0.0;
        const auto [ptr, ec] =
            std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
        if (ec != std::errc{} || ptr != value_text.data() + value_text.size())
            throw CsvFormatError("line " + std::to_string(line_no) + ": bad numeric value '" +
                                 std::string(value_text) + "'");
        records.emplace_back(SourceLabel(label), value);
    }
    if (records.empty()) throw EmptyInputError("CSV contains no observations");
    return dataset_from_records(records);
}

inline MultiSourceDataset read_dataset_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open '" + path + "'");
    return read_dataset_csv(in);
}

}  // namespace oos
