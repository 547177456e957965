#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace macf {

std::string trim(const std::string& s);
std::string to_lower(const std::string& s);

// Lowercased alphanumeric runs; everything else is a separator.
std::vector<std::string> tokenize(const std::string& text);

std::string join(const std::vector<std::string>& parts, const std::string& sep);

// FNV-1a over the bytes of `s`.
std::uint64_t fnv1a64(const std::string& s);

std::string format_double(double value, int precision);

// Hard byte clamp; appends nothing, just cuts.
std::string clamp_text(const std::string& s, std::size_t max_bytes);

}  // namespace macf
