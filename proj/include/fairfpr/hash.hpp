#pragma once

#include <string>

namespace fairfpr {

/// SHA-256 hex digest (FIPS 180-4).
std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);

}  // namespace fairfpr
