#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace fairfpr {

/// Shortest text that round-trips a double exactly (17 significant digits).
std::string format_g17(double x);

/// strtod with full-string validation; throws ParseError naming `context`.
double parse_double(const std::string& text, const std::string& context);
long long parse_int(const std::string& text, const std::string& context);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

std::vector<std::string> split_csv_line(const std::string& line);

/// nlohmann parse with byte offsets converted to a 1-based line number in
/// the ParseError message.
nlohmann::json parse_json(const std::string& text, const std::string& origin);
nlohmann::json parse_json_file(const std::string& path);

}  // namespace fairfpr
