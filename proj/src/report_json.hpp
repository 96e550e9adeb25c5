#pragma once

#include <json.hpp>

#include "hybridkvh/run.hpp"

namespace hkvh {

using json = nlohmann::ordered_json;

inline json monitor_json(const Monitor& m) {
    // JSON has no NaN; non-finite values are written as null
    const auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json out = {{"name", m.name}, {"value", num(m.value)}, {"limit", m.limit}, {"bound", m.bound()}};
    if (!std::isnan(m.target)) out["target"] = m.target;
    out["passed"] = m.passed();
    return out;
}

}  // namespace hkvh
