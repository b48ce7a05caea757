#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>

#include "iomc/evaluation.hpp"
#include "iomc/fourier.hpp"

namespace iomc {

RadialSpectrum radial_power_spectrum(std::span<const std::vector<double>> images, GridSize dims, std::size_t n_bins) {
    if (!dims.valid()) throw DimensionError("radial_power_spectrum: invalid grid");
    if (images.empty()) throw std::invalid_argument("radial_power_spectrum: empty image set");
    if (n_bins == 0) throw std::invalid_argument("radial_power_spectrum: n_bins must be >= 1");
    for (const auto& img : images) require_same_size(img.size(), dims.count(), "radial_power_spectrum image");

    // Bin lookup shared by every image.
    std::vector<long> bin_of(dims.count(), -1);
    RadialSpectrum out;
    out.power.assign(n_bins, 0.0);
    out.counts.assign(n_bins, 0);
    for (int v = 0; v < dims.height; ++v) {
        const double fv = signed_frequency(v, dims.height);
        for (int u = 0; u < dims.width; ++u) {
            const double fu = signed_frequency(u, dims.width);
            const auto b = static_cast<std::size_t>(std::floor(std::sqrt(fu * fu + fv * fv)));
            if (b >= n_bins) continue;
            bin_of[std::size_t(v) * std::size_t(dims.width) + std::size_t(u)] = long(b);
            ++out.counts[b];
        }
    }

    const double norm = double(dims.count());
    for (const auto& img : images) {
        const auto F = dft2d(img, dims);
        for (std::size_t i = 0; i < F.size(); ++i)
            if (bin_of[i] >= 0) out.power[std::size_t(bin_of[i])] += std::norm(F[i]) / norm;
    }
    for (std::size_t b = 0; b < n_bins; ++b)
        if (out.counts[b] > 0) out.power[b] /= double(out.counts[b]) * double(images.size());
    return out;
}

double max_relative_band_deviation(const RadialSpectrum& a, const RadialSpectrum& b, bool exclude_dc) {
    require_same_size(a.power.size(), b.power.size(), "max_relative_band_deviation");
    double worst = 0.0;
    for (std::size_t i = exclude_dc ? 1 : 0; i < a.power.size(); ++i)
        if (b.power[i] > 0.0) worst = std::max(worst, std::abs(a.power[i] - b.power[i]) / b.power[i]);
    return worst;
}

std::string spectrum_to_csv(const RadialSpectrum& spectrum) {
    std::string out = "bin,power,count\n";
    char buf[96];
    for (std::size_t i = 0; i < spectrum.power.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu\n", i, spectrum.power[i], spectrum.counts[i]);
        out += buf;
    }
    return out;
}

}  // namespace iomc
