#include "oce/core/parallel.hpp"

#include <atomic>

namespace oce {

namespace {
unsigned default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}
std::atomic<unsigned> g_threads{default_threads()};
} // namespace

void set_thread_count(unsigned n) { g_threads = n == 0 ? default_threads() : n; }

unsigned thread_count() { return g_threads.load(); }

} // namespace oce
