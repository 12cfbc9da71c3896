#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rectify {

// Closed set of classes the rectifying detector can recognize.
// Names are normalized (lowercase, collapsed whitespace) and unique;
// iteration order is the load order of the catalog file.
class ClassCatalog {
public:
    ClassCatalog() = default;
    explicit ClassCatalog(std::vector<std::string> normalized_names);

    bool contains(std::string_view normalized_name) const;
    std::optional<std::size_t> index_of(std::string_view normalized_name) const;

    const std::vector<std::string>& classes() const { return classes_; }
    std::size_t size() const { return classes_.size(); }

private:
    std::vector<std::string> classes_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Reads one class name per UTF-8 line, normalizes, preserves order.
// Rejects duplicates (naming the offending line) and empty catalogs.
ClassCatalog load_catalog(const std::string& path);

}  // namespace rectify
