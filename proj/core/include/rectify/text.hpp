#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rectify {

// Canonical form shared by catalog classes and explanation tokens:
// lowercase ASCII, leading/trailing whitespace trimmed, internal
// whitespace runs collapsed to a single space.
std::string normalize_token(std::string_view raw);

// Splits on whitespace runs; no empty parts.
std::vector<std::string> split_words(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace rectify
