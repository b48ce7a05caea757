#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "iomc/object_model.hpp"
#include "iomc/rng.hpp"
#include "iomc/types.hpp"

namespace iomc {

/// Idealized parallel-hole collimator: detector m integrates the object
/// against h_m(r) = h / (2 pi w_h^2) exp(-|r - r_m|^2 / (2 w_h^2)).
/// Detector locations r_m sit at integer pixel coordinates (x, y) of `grid`.
struct GaussianPrfSystem {
    double height = 35.0;
    double width = 2.0;
    GridSize grid{64, 64};

    void validate() const;
    Point2 detector(std::size_t m) const {
        return {double(m % static_cast<std::size_t>(grid.width)),
                double(m / static_cast<std::size_t>(grid.width))};
    }
};

enum class Layout : std::uint8_t {
    real = 0,
    /// complex data stored as [real parts..., imaginary parts...]
    stacked_complex = 1,
};

/// Measured (or noiseless) data vector g, b or s.
/// `dims` is the image grid the data came from; for stacked-complex k-space
/// data the vector length is twice the number of retained frequencies.
struct Measurement {
    std::vector<double> data;
    Layout layout = Layout::real;
    GridSize dims{};

    std::size_t size() const { return data.size(); }
    void validate() const;

    friend bool operator==(const Measurement&, const Measurement&) = default;
};

Measurement zero_like(const Measurement& m);

enum class NoiseKind : std::uint8_t { iid_gaussian = 0, iid_complex_gaussian = 1 };

struct NoiseModel {
    NoiseKind kind = NoiseKind::iid_gaussian;
    double sigma = 20.0;

    void validate() const;
};

/// Closed-form Gaussian-Gaussian convolution of a lumpy object with the PRF:
///   b_m = sum_n a h w_b^2/(w_b^2 + w_h^2) exp(-|r_m - r_n|^2 / (2 (w_b^2 + w_h^2)))
Measurement image_lumpy_analytic(const LumpyRealization& realization, const GaussianPrfSystem& sys);

/// Same identity for the signal with (a_s, w_s, r_s).
Measurement image_signal_analytic(const GaussianSignal& signal, const GaussianPrfSystem& sys);

/// Single-lump image at `center` (amplitude and width from `realization`),
/// accumulated into `out` with weight `scale`. Used for incremental chain updates.
void accumulate_lump_image(Point2 center, double amplitude, double width, const GaussianPrfSystem& sys,
                           double scale, std::span<double> out);

using ScalarField = std::function<double(Point2)>;

/// Quadrature reference for the continuous-to-discrete mapping: tensor-product
/// midpoint rule with node spacing `quad_step` over the field of view padded by
/// 8 PRF widths on every side. Requires 0 < quad_step <= w_h / 4.
Measurement project_prf_numeric(const ScalarField& field, const GaussianPrfSystem& sys, double quad_step);

/// Adds i.i.d. N(0, sigma^2) to every stored component. For stacked-complex
/// data this is the circular complex Gaussian with per-component sigma.
Measurement add_noise(const Measurement& g, const NoiseModel& noise, Rng& rng);

/// 20 log10(max component over all measurements / sigma).
double psnr(std::span<const Measurement> test_set, double sigma);

/// Rounds every component to float32 so that a file round-trip is lossless.
void quantize_to_float32(Measurement& m);

// Binary measurement file: "IOMM", u32 version, u8 layout, u32 width, u32 height,
// u64 count, float32[count]; little-endian.
void write_measurement(const std::filesystem::path& path, const Measurement& m);
Measurement read_measurement(const std::filesystem::path& path);

}  // namespace iomc
