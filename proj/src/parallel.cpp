#include <geocorr/parallel.hpp>

namespace geocorr {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace geocorr
