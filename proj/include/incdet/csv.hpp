#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "incdet/dataset.hpp"
#include "incdet/errors.hpp"

namespace incdet::datagen {

namespace detail {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(std::string s) {
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    while (!s.empty() && !notspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && !notspace(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(i);
}

inline double parse_double(const std::string& cell, std::size_t line_no, const std::string& col) {
    const std::string t = trim(cell);
    double value = 0.0;
    const auto* begin = t.data();
    const auto* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ParseError("line " + std::to_string(line_no) + ": column '" + col +
                         "': not a number: '" + t + "'");
    return value;
}

inline int parse_int(const std::string& cell, std::size_t line_no, const std::string& col) {
    const std::string t = trim(cell);
    int value = 0;
    const auto* begin = t.data();
    const auto* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ParseError("line " + std::to_string(line_no) + ": column '" + col +
                         "': not an integer: '" + t + "'");
    return value;
}

/// Shortest round-trippable decimal form of a double.
inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace detail

/// Expected column layout: f0..f{d-1}, severity, fault_id. Line numbers in
/// errors count from the file start, header = line 1.
inline Dataset ingest_csv(const std::string& path, const LabelingPolicy& policy) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = detail::split_line(line);
    if (header.size() < 3)
        throw ParseError(path + ": header needs f0.., severity, fault_id");
    const std::size_t d = header.size() - 2;
    for (std::size_t j = 0; j < d; ++j) {
        const std::string want = "f" + std::to_string(j);
        if (detail::trim(header[j]) != want)
            throw ParseError(path + ": header column " + std::to_string(j + 1) +
                             " is '" + detail::trim(header[j]) + "', expected '" + want + "'");
    }
    if (detail::trim(header[d]) != "severity" || detail::trim(header[d + 1]) != "fault_id")
        throw ParseError(path + ": header must end with severity, fault_id");

    Dataset out;
    out.dim = d;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_line(line);
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        LabeledExample e;
        e.features.resize(d);
        for (std::size_t j = 0; j < d; ++j)
            e.features[j] = detail::parse_double(cells[j], line_no, detail::trim(header[j]));
        e.severity = detail::parse_int(cells[d], line_no, "severity");
        e.fault_id = detail::parse_int(cells[d + 1], line_no, "fault_id");
        e.z = policy.is_positive(e.severity) ? 1 : 0;
        try {
            validate_example(e, policy);
        } catch (const ParseError& err) {
            throw ParseError("line " + std::to_string(line_no) + ": " + err.what());
        }
        out.examples.push_back(std::move(e));
    }
    return out;
}

inline void write_csv(const std::string& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (std::size_t j = 0; j < data.dim; ++j) out << "f" << j << ",";
    out << "severity,fault_id\n";
    for (const auto& e : data.examples) {
        for (std::size_t j = 0; j < data.dim; ++j)
            out << detail::format_double(e.features[j]) << ",";
        out << e.severity << "," << e.fault_id << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace incdet::datagen
