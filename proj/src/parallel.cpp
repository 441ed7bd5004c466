#include "plab/parallel.hpp"

namespace plab {

namespace {
std::atomic<int> g_max_workers{0};
}

void set_max_workers(int n) { g_max_workers.store(n < 0 ? 0 : n); }

int max_workers() {
    const int n = g_max_workers.load();
    if (n > 0) return n;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace plab
