#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace coalsfs {

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

double parse_double(std::string_view s);
std::int64_t parse_int(std::string_view s);
std::uint64_t parse_uint(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

}  // namespace coalsfs
