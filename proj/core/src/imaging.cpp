#include "iomc/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace iomc {

void GaussianPrfSystem::validate() const {
    if (!(width > 0.0)) throw std::invalid_argument("PRF system: width must be > 0");
    if (!grid.valid()) throw std::invalid_argument("PRF system: grid must be at least 1x1");
}

void Measurement::validate() const {
    if (layout == Layout::stacked_complex && data.size() % 2 != 0)
        throw DimensionError("stacked-complex measurement must have even length");
    if (layout == Layout::real && dims.valid() && data.size() != dims.count())
        throw DimensionError("real measurement length does not match its grid");
}

Measurement zero_like(const Measurement& m) {
    return Measurement{std::vector<double>(m.data.size(), 0.0), m.layout, m.dims};
}

void NoiseModel::validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("noise model: sigma must be > 0");
}

void accumulate_lump_image(Point2 center, double amplitude, double width, const GaussianPrfSystem& sys,
                           double scale, std::span<double> out) {
    require_same_size(out.size(), sys.grid.count(), "accumulate_lump_image");
    const double var = width * width + sys.width * sys.width;
    const double prefactor = scale * amplitude * sys.height * (width * width) / var;
    const double inv = 1.0 / (2.0 * var);

    // The kernel is separable, so one row and one column of exponentials suffice.
    thread_local std::vector<double> ex, ey;
    ex.resize(static_cast<std::size_t>(sys.grid.width));
    ey.resize(static_cast<std::size_t>(sys.grid.height));
    for (int x = 0; x < sys.grid.width; ++x) {
        const double d = x - center.x;
        ex[x] = std::exp(-d * d * inv);
    }
    for (int y = 0; y < sys.grid.height; ++y) {
        const double d = y - center.y;
        ey[y] = prefactor * std::exp(-d * d * inv);
    }
    for (int y = 0; y < sys.grid.height; ++y) {
        double* row = out.data() + static_cast<std::size_t>(y) * sys.grid.width;
        const double wy = ey[y];
        for (int x = 0; x < sys.grid.width; ++x) row[x] += wy * ex[x];
    }
}

Measurement image_lumpy_analytic(const LumpyRealization& realization, const GaussianPrfSystem& sys) {
    sys.validate();
    Measurement out{std::vector<double>(sys.grid.count(), 0.0), Layout::real, sys.grid};
    for (const Point2& c : realization.centers)
        accumulate_lump_image(c, realization.amplitude, realization.width, sys, 1.0, out.data);
    return out;
}

Measurement image_signal_analytic(const GaussianSignal& signal, const GaussianPrfSystem& sys) {
    sys.validate();
    signal.validate();
    Measurement out{std::vector<double>(sys.grid.count(), 0.0), Layout::real, sys.grid};
    accumulate_lump_image(signal.center, signal.amplitude, signal.width, sys, 1.0, out.data);
    return out;
}

Measurement project_prf_numeric(const ScalarField& field, const GaussianPrfSystem& sys, double quad_step) {
    sys.validate();
    if (!(quad_step > 0.0)) throw std::invalid_argument("project_prf_numeric: quad_step must be > 0");
    if (quad_step > sys.width / 4.0)
        throw std::invalid_argument("project_prf_numeric: quad_step must not exceed w_h / 4");

    const double pad = 8.0 * sys.width;
    const int nx = static_cast<int>(std::ceil((sys.grid.width - 1 + 2.0 * pad) / quad_step));
    const int ny = static_cast<int>(std::ceil((sys.grid.height - 1 + 2.0 * pad) / quad_step));
    auto node = [&](int i) { return -pad + (i + 0.5) * quad_step; };

    std::vector<double> samples(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) samples[static_cast<std::size_t>(j) * nx + i] = field({node(i), node(j)});

    const double inv = 1.0 / (2.0 * sys.width * sys.width);
    const double norm = sys.height / (2.0 * std::numbers::pi * sys.width * sys.width) * quad_step * quad_step;

    // Node index range within `pad` of detector coordinate `m`: node(i) in [m - pad, m + pad].
    auto window = [&](int m, int n) {
        const int lo = std::max(0, static_cast<int>(std::floor(m / quad_step - 0.5)));
        const int hi = std::min(n - 1, static_cast<int>(std::ceil((m + 2.0 * pad) / quad_step - 0.5)));
        return std::pair{lo, hi};
    };

    // Separable sweep: integrate along x for every node row, then along y.
    const int W = sys.grid.width;
    const int H = sys.grid.height;
    std::vector<double> partial(static_cast<std::size_t>(ny) * W, 0.0);
    for (int mx = 0; mx < W; ++mx) {
        const auto [lo, hi] = window(mx, nx);
        std::vector<double> wx(static_cast<std::size_t>(hi - lo + 1));
        for (int i = lo; i <= hi; ++i) {
            const double d = node(i) - mx;
            wx[i - lo] = std::exp(-d * d * inv);
        }
        for (int j = 0; j < ny; ++j) {
            const double* row = samples.data() + static_cast<std::size_t>(j) * nx;
            double acc = 0.0;
            for (int i = lo; i <= hi; ++i) acc += wx[i - lo] * row[i];
            partial[static_cast<std::size_t>(j) * W + mx] = acc;
        }
    }

    Measurement out{std::vector<double>(sys.grid.count(), 0.0), Layout::real, sys.grid};
    for (int my = 0; my < H; ++my) {
        const auto [lo, hi] = window(my, ny);
        for (int j = lo; j <= hi; ++j) {
            const double d = node(j) - my;
            const double wy = std::exp(-d * d * inv) * norm;
            const double* row = partial.data() + static_cast<std::size_t>(j) * W;
            double* dst = out.data.data() + static_cast<std::size_t>(my) * W;
            for (int mx = 0; mx < W; ++mx) dst[mx] += wy * row[mx];
        }
    }
    return out;
}

Measurement add_noise(const Measurement& g, const NoiseModel& noise, Rng& rng) {
    noise.validate();
    Measurement out = g;
    std::normal_distribution<double> normal(0.0, noise.sigma);
    for (double& v : out.data) v += normal(rng);
    return out;
}

double psnr(std::span<const Measurement> test_set, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("psnr: sigma must be > 0");
    if (test_set.empty()) throw std::invalid_argument("psnr: empty test set");
    double max_g = -std::numeric_limits<double>::infinity();
    for (const Measurement& m : test_set)
        for (double v : m.data) max_g = std::max(max_g, v);
    return 20.0 * std::log10(max_g / sigma);
}

void quantize_to_float32(Measurement& m) {
    for (double& v : m.data) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace iomc
