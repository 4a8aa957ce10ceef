#pragma once
// Minimal CSV plumbing shared by the dataset loader and the result emitters.
// Numbers are written with shortest-round-trip formatting so identical values
// always produce identical bytes.

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "driftstream/model.hpp"

namespace driftstream {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

// Strict full-token parse; returns false on trailing garbage or empty input.
inline bool parse_double(std::string_view field, double& out) {
    const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
    return res.ec == std::errc{} && res.ptr == field.data() + field.size();
}

inline bool parse_int(std::string_view field, std::int64_t& out) {
    const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
    return res.ec == std::errc{} && res.ptr == field.data() + field.size();
}

}  // namespace driftstream
