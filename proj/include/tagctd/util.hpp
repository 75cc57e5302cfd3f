#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tagctd {

std::string trim(std::string_view s);

// Lowercase (ASCII), trim, collapse runs of internal whitespace to one space.
// This is the canonical form used for knowledge-base lookups and dedup.
std::string normalize_label(std::string_view s);

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace tagctd
