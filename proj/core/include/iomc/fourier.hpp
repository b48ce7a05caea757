#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "iomc/imaging.hpp"
#include "iomc/rng.hpp"
#include "iomc/types.hpp"

namespace iomc {

/// Unnormalized forward 2-D DFT of a real row-major image:
/// G(u, v) = sum_{x,y} f(x, y) exp(-2 pi i (u x / W + v y / H)). Output row-major in (v, u).
std::vector<std::complex<double>> dft2d(std::span<const double> image, GridSize dims);

/// Signed frequency index of DFT bin `k` on an axis of length `n` (k < n/2 maps to k, else k - n).
inline int signed_frequency(int k, int n) { return k < (n + 1) / 2 ? k : k - n; }

/// Radius of exclusion r(k) = scale * (base + slope * |k| / k_max) for frequency
/// magnitude |k|, with k_max the largest magnitude on the grid. `scale` is
/// calibrated by bisection to reach the requested acceleration.
struct DensityProfile {
    double base = 1.0;
    double slope = 3.0;
    /// Side length of the fully sampled square around DC.
    int calibration_size = 16;
};

/// Boolean sampling pattern over the DFT grid (unshifted, row-major in (v, u)).
struct SamplingMask {
    GridSize dims{};
    std::vector<std::uint8_t> selected;
    /// Calibrated radius scale; zero for a full mask.
    double radius_scale = 0.0;
    DensityProfile profile{};

    std::size_t count() const;
    double fraction() const { return double(count()) / double(dims.count()); }
    bool in_calibration_region(int u, int v) const;
    /// Local minimum spacing at bin (u, v).
    double local_radius(int u, int v) const;

    friend bool operator==(const SamplingMask& a, const SamplingMask& b) {
        return a.dims == b.dims && a.selected == b.selected;
    }
};

/// Variable-density Poisson-disc pattern by dart throwing over the discrete
/// frequency grid. Two selected bins p, q outside the calibration square are
/// always at least (r(p) + r(q)) / 2 apart. Deterministic given the seed.
SamplingMask make_poisson_disc_mask(GridSize dims, double acceleration, const DensityProfile& profile, Rng& rng);

/// Undersampled Fourier imaging operator (discrete-to-discrete).
struct FourierSamplingOperator {
    GridSize dims{128, 128};
    SamplingMask mask;
    double acceleration = 16.0;

    /// Length of the stacked-complex output.
    std::size_t output_size() const { return 2 * mask.count(); }
};

FourierSamplingOperator make_fourier_operator(SamplingMask mask, double acceleration);

/// Forward DFT of the object, retained bins in raster order, stacked [re; im].
Measurement apply_fourier_operator(std::span<const double> object_image, const FourierSamplingOperator& op);

/// Portable bitmap (P4 written; P1 and P4 read). Black (1) marks a selected bin.
void write_mask_pbm(const std::filesystem::path& path, const SamplingMask& mask);
SamplingMask read_mask_pbm(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const SamplingMask& m);
void from_json(const nlohmann::json& j, SamplingMask& m);

}  // namespace iomc
