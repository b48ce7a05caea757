#include "harness/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace iomc::harness {

namespace {
std::mutex g_log_mutex;
std::atomic<bool> g_enabled{true};
}  // namespace

void set_logging(bool enabled) { g_enabled = enabled; }

void log_line(const std::string& line) {
    if (!g_enabled) return;
    std::lock_guard lock(g_log_mutex);
    std::fprintf(stderr, "%s\n", line.c_str());
}

}  // namespace iomc::harness
