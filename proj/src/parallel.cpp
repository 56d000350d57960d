#include "anchorforge/parallel.hpp"

#include <cstdlib>

#include "anchorforge/report.hpp"

namespace anchorforge {

unsigned default_workers() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ANCHORFORGE_THREADS")) {
        if (auto v = parse_int(env); v && *v > 0) return static_cast<unsigned>(std::min<long long>(*v, 256));
    }
    return hw;
}

}  // namespace anchorforge
