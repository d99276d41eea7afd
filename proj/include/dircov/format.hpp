// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dircov {

/// Shortest decimal string that parses back to the same double; "NA" for NaN.
std::string format_double(double v);

/// Strict full-string parse; throws InputError on trailing garbage.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);
unsigned long long parse_u64(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

}  // namespace dircov
