#include "rectify/catalog.hpp"

#include <fstream>

#include "rectify/errors.hpp"
#include "rectify/text.hpp"

namespace rectify {

ClassCatalog::ClassCatalog(std::vector<std::string> normalized_names)
    : classes_(std::move(normalized_names)) {
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        index_.emplace(classes_[i], i);
    }
}

bool ClassCatalog::contains(std::string_view normalized_name) const {
    return index_.find(std::string(normalized_name)) != index_.end();
}

std::optional<std::size_t> ClassCatalog::index_of(std::string_view normalized_name) const {
    auto it = index_.find(std::string(normalized_name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

ClassCatalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("catalog: cannot open '" + path + "'");
    }
    std::vector<std::string> names;
    std::unordered_map<std::string, int> seen;  // name -> first line
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string name = normalize_token(line);
        if (name.empty()) continue;  // blank lines are ignored
        auto [it, inserted] = seen.emplace(name, line_no);
        if (!inserted) {
            throw ValidationError("catalog '" + path + "' line " + std::to_string(line_no) +
                                  ": duplicate class '" + name + "' (first seen on line " +
                                  std::to_string(it->second) + ")");
        }
        names.push_back(std::move(name));
    }
    if (names.empty()) {
        throw ValidationError("catalog '" + path + "': no classes found");
    }
    return ClassCatalog(std::move(names));
}

}  // namespace rectify
