#include "fairfpr/textio.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fairfpr/error.hpp"

namespace fairfpr {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(const std::string& text, const std::string& context) {
  if (text.empty()) throw ParseError(context + ": empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size())
    throw ParseError(context + ": invalid number '" + text + "'");
  return v;
}

long long parse_int(const std::string& text, const std::string& context) {
  if (text.empty()) throw ParseError(context + ": empty integer field");
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size())
    throw ParseError(context + ": invalid integer '" + text + "'");
  return v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
  if (!out) throw ConfigError("write failed: " + path);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

nlohmann::json parse_json(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // e.byte is a 1-based offset into the input; recover the line for the message.
    std::size_t line = 1;
    const std::size_t stop = e.byte > 0 ? std::min(text.size(), static_cast<std::size_t>(e.byte) - 1)
                                        : std::size_t{0};
    for (std::size_t i = 0; i < stop; ++i)
      if (text[i] == '\n') ++line;
    throw ParseError(origin + ": JSON parse error at line " + std::to_string(line) + ": " +
                     e.what());
  }
}

nlohmann::json parse_json_file(const std::string& path) {
  return parse_json(read_text_file(path), path);
}

}  // namespace fairfpr
