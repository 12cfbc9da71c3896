#include "rectify/types.hpp"

#include <algorithm>

namespace rectify {

std::set<std::string> RectifierSet::class_set() const {
    std::set<std::string> out;
    for (const Detection& d : detections) out.insert(d.class_name);
    return out;
}

std::map<std::string, double> RectifierSet::effective_areas() const {
    std::map<std::string, double> areas;
    for (const Detection& d : detections) {
        auto [it, inserted] = areas.emplace(d.class_name, d.area_frac);
        if (!inserted) it->second = std::max(it->second, d.area_frac);
    }
    return areas;
}

}  // namespace rectify
