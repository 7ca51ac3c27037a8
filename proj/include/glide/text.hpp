#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace glide::text {

/// Fixed-point rendering with `decimals` digits; never prints "-0.000000".
std::string fixed(double value, int decimals = 6);

/// Shortest decimal string that parses back to the same double, no exponent.
std::string shortest(double value);

std::vector<std::string_view> split_ws(std::string_view line);

std::string_view trim(std::string_view s);

std::string upper(std::string_view s);

/// Strict decimal: 1*DIGIT ["." 1*DIGIT].  No sign, no exponent.
bool parse_decimal(std::string_view token, double& out);

/// Any finite floating literal accepted by from_chars (signs, exponents).
bool parse_double(std::string_view token, double& out);

}  // namespace glide::text
