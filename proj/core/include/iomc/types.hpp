#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iomc {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double squared_distance(Point2 a, Point2 b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Width x height of a pixel grid. Images are stored row-major: index = y * width + x.
struct GridSize {
    int width = 0;
    int height = 0;

    std::size_t count() const {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    bool valid() const { return width >= 1 && height >= 1; }

    friend bool operator==(const GridSize&, const GridSize&) = default;
};

/// Raised when vector/matrix sizes disagree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised on malformed binary or text inputs.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw DimensionError(std::string(what) + ": size mismatch (" + std::to_string(a) +
                             " vs " + std::to_string(b) + ")");
    }
}

}  // namespace iomc
