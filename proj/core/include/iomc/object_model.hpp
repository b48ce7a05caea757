#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "iomc/rng.hpp"
#include "iomc/types.hpp"

namespace iomc {

/// Continuous lumpy background: a Poisson number of isotropic Gaussian lumps
/// with centers uniform over the field of view [0, width) x [0, height).
struct LumpyModelParams {
    double mean_lumps = 6.0;
    double amplitude = 1.0;
    double width = 8.0;
    GridSize fov{64, 64};
    /// When set, every realization has exactly this many lumps.
    std::optional<std::size_t> fixed_count;

    void validate() const;
    double fov_area() const { return static_cast<double>(fov.width) * fov.height; }
    bool contains(Point2 p) const {
        return p.x >= 0.0 && p.x < fov.width && p.y >= 0.0 && p.y < fov.height;
    }
};

struct LumpyRealization {
    std::vector<Point2> centers;
    double amplitude = 1.0;
    double width = 8.0;
    GridSize fov{64, 64};

    friend bool operator==(const LumpyRealization&, const LumpyRealization&) = default;
};

struct GaussianSignal {
    double amplitude = 0.3;
    double width = 2.5;
    Point2 center{32.0, 32.0};

    void validate() const;
};

LumpyRealization sample_lumpy_realization(const LumpyModelParams& params, Rng& rng);

/// f_b(r) = sum_n a * exp(-|r - r_n|^2 / (2 w_b^2))
double eval_object_field(const LumpyRealization& realization, Point2 point);

/// f_s(r) = a_s * exp(-|r - r_s|^2 / (2 w_s^2))
double eval_signal_field(const GaussianSignal& signal, Point2 point);

/// Samples a field at the integer pixel locations of `grid`; row-major.
template <class Field>
std::vector<double> rasterize(const Field& field, GridSize grid) {
    std::vector<double> out(grid.count());
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x)
            out[static_cast<std::size_t>(y) * grid.width + x] = field(Point2{double(x), double(y)});
    return out;
}

void to_json(nlohmann::json& j, const LumpyRealization& r);
void from_json(const nlohmann::json& j, LumpyRealization& r);
void to_json(nlohmann::json& j, const LumpyModelParams& p);
void from_json(const nlohmann::json& j, LumpyModelParams& p);
void to_json(nlohmann::json& j, const GaussianSignal& s);
void from_json(const nlohmann::json& j, GaussianSignal& s);

}  // namespace iomc
