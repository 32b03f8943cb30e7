#pragma once

#include <cstdlib>
#include <string>

namespace dini {

/// Enumeration budget (grid cells touched per evaluation). DINIDIFF_BUDGET overrides.
inline unsigned long long enumeration_budget() {
    if (const char* s = std::getenv("DINIDIFF_BUDGET")) {
        try {
            return std::stoull(s);
        } catch (...) {
            return 1ull << 20;
        }
    }
    return 1ull << 20;
}

}  // namespace dini
