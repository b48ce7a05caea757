#pragma once

#include <string>

namespace iomc::harness {

/// Progress lines on stderr, serialized across worker threads.
void log_line(const std::string& line);
void set_logging(bool enabled);

}  // namespace iomc::harness
