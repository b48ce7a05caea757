#include "iomc/fourier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fftw3.h>
#include <nlohmann/json.hpp>

#include "binary_io.hpp"

namespace iomc {

namespace {

struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex, FftwFree>;

FftwBuffer alloc_complex(std::size_t n) {
    FftwBuffer buf(fftw_alloc_complex(n));
    if (!buf) throw std::bad_alloc();
    return buf;
}

// The FFTW planner is not thread-safe; plan execution on fresh arrays is.
class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan forward(GridSize dims) {
        std::lock_guard lock(mutex_);
        const auto key = std::pair{dims.width, dims.height};
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto in = alloc_complex(dims.count());
        auto out = alloc_complex(dims.count());
        fftw_plan plan = fftw_plan_dft_2d(dims.height, dims.width, in.get(), out.get(), FFTW_FORWARD, FFTW_ESTIMATE);
        if (!plan) throw std::runtime_error("FFTW planning failed");
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

}  // namespace

std::vector<std::complex<double>> dft2d(std::span<const double> image, GridSize dims) {
    if (!dims.valid()) throw DimensionError("dft2d: invalid grid");
    require_same_size(image.size(), dims.count(), "dft2d");
    const fftw_plan plan = plan_cache().forward(dims);
    auto in = alloc_complex(dims.count());
    auto out = alloc_complex(dims.count());
    for (std::size_t i = 0; i < image.size(); ++i) {
        in.get()[i][0] = image[i];
        in.get()[i][1] = 0.0;
    }
    fftw_execute_dft(plan, in.get(), out.get());
    std::vector<std::complex<double>> result(dims.count());
    for (std::size_t i = 0; i < result.size(); ++i) result[i] = {out.get()[i][0], out.get()[i][1]};
    return result;
}

// ---------------------------------------------------------------------------
// Sampling mask

std::size_t SamplingMask::count() const {
    return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), std::uint8_t{1}));
}

bool SamplingMask::in_calibration_region(int u, int v) const {
    const int half = profile.calibration_size / 2;
    const int ku = signed_frequency(u, dims.width);
    const int kv = signed_frequency(v, dims.height);
    return ku >= -half && ku < profile.calibration_size - half && kv >= -half &&
           kv < profile.calibration_size - half;
}

namespace {

double max_frequency_magnitude(GridSize dims) {
    const double hx = dims.width / 2;
    const double hy = dims.height / 2;
    return std::max(1.0, std::hypot(hx, hy));
}

double radius_at(double ku, double kv, double scale, const DensityProfile& profile, double kmax) {
    return scale * (profile.base + profile.slope * std::hypot(ku, kv) / kmax);
}

struct Candidate {
    int u, v;      // DFT bin
    int ku, kv;    // signed frequency
    double radius_unit;  // radius at scale 1
};

// One dart-throwing pass at a fixed radius scale over a fixed candidate order.
std::vector<std::uint8_t> throw_darts(const std::vector<Candidate>& order, GridSize dims, double scale,
                                      double max_radius_unit, std::vector<std::uint8_t> selected) {
    // Occupancy indexed by centered coordinates (ku + W/2, kv + H/2).
    const int W = dims.width, H = dims.height;
    const int ox = W / 2, oy = H / 2;
    std::vector<int> occupant(dims.count(), -1);
    std::vector<double> accepted_radius;
    accepted_radius.reserve(order.size());

    const double r_max = scale * max_radius_unit;
    for (const Candidate& c : order) {
        const double rc = scale * c.radius_unit;
        const int reach = static_cast<int>(std::ceil((rc + r_max) / 2.0));
        bool ok = true;
        for (int dy = -reach; dy <= reach && ok; ++dy) {
            const int cy = c.kv + oy + dy;
            if (cy < 0 || cy >= H) continue;
            for (int dx = -reach; dx <= reach; ++dx) {
                const int cx = c.ku + ox + dx;
                if (cx < 0 || cx >= W) continue;
                const int id = occupant[static_cast<std::size_t>(cy) * W + cx];
                if (id < 0) continue;
                const double need = 0.5 * (rc + accepted_radius[id]);
                if (double(dx * dx + dy * dy) < need * need) {
                    ok = false;
                    break;
                }
            }
        }
        if (!ok) continue;
        occupant[static_cast<std::size_t>(c.kv + oy) * W + (c.ku + ox)] = static_cast<int>(accepted_radius.size());
        accepted_radius.push_back(rc);
        selected[static_cast<std::size_t>(c.v) * W + c.u] = 1;
    }
    return selected;
}

}  // namespace

double SamplingMask::local_radius(int u, int v) const {
    return radius_at(signed_frequency(u, dims.width), signed_frequency(v, dims.height), radius_scale, profile,
                     max_frequency_magnitude(dims));
}

SamplingMask make_poisson_disc_mask(GridSize dims, double acceleration, const DensityProfile& profile, Rng& rng) {
    if (!dims.valid()) throw DimensionError("make_poisson_disc_mask: invalid grid");
    if (!(acceleration >= 1.0)) throw std::invalid_argument("make_poisson_disc_mask: acceleration must be >= 1");
    if (profile.calibration_size < 0 || !(profile.base > 0.0) || profile.slope < 0.0)
        throw std::invalid_argument("make_poisson_disc_mask: invalid density profile");

    SamplingMask mask;
    mask.dims = dims;
    mask.profile = profile;
    mask.selected.assign(dims.count(), 0);

    const std::size_t total = dims.count();
    const auto target = static_cast<std::size_t>(std::llround(double(total) / acceleration));
    if (acceleration == 1.0 || target >= total) {
        mask.selected.assign(total, 1);
        return mask;
    }

    const double kmax = max_frequency_magnitude(dims);
    std::vector<Candidate> candidates;
    std::size_t calibration = 0;
    for (int v = 0; v < dims.height; ++v) {
        for (int u = 0; u < dims.width; ++u) {
            if (mask.in_calibration_region(u, v)) {
                mask.selected[static_cast<std::size_t>(v) * dims.width + u] = 1;
                ++calibration;
                continue;
            }
            const int ku = signed_frequency(u, dims.width);
            const int kv = signed_frequency(v, dims.height);
            candidates.push_back({u, v, ku, kv, radius_at(ku, kv, 1.0, profile, kmax)});
        }
    }
    if (calibration > target)
        throw std::invalid_argument("make_poisson_disc_mask: calibration region (" + std::to_string(calibration) +
                                    " bins) exceeds the target sample count " + std::to_string(target));
    const std::size_t darts_wanted = target - calibration;
    if (darts_wanted == 0) return mask;

    std::shuffle(candidates.begin(), candidates.end(), rng);
    double max_unit = 0.0;
    for (const auto& c : candidates) max_unit = std::max(max_unit, c.radius_unit);

    auto count_new = [&](const std::vector<std::uint8_t>& sel) {
        return static_cast<std::size_t>(std::count(sel.begin(), sel.end(), std::uint8_t{1})) - calibration;
    };

    // Accepted count decreases with scale; bracket then bisect.
    double lo = 0.0, hi = 1.0;
    auto trial = throw_darts(candidates, dims, hi, max_unit, mask.selected);
    while (count_new(trial) > darts_wanted) {
        lo = hi;
        hi *= 2.0;
        trial = throw_darts(candidates, dims, hi, max_unit, mask.selected);
    }
    double best_scale = hi;
    auto best = trial;
    std::size_t best_err = darts_wanted - count_new(trial);
    for (int iter = 0; iter < 60 && best_err > 0; ++iter) {
        const double mid = 0.5 * (lo + hi);
        auto sel = throw_darts(candidates, dims, mid, max_unit, mask.selected);
        const std::size_t n = count_new(sel);
        const std::size_t err = n > darts_wanted ? n - darts_wanted : darts_wanted - n;
        if (err < best_err) {
            best_err = err;
            best_scale = mid;
            best = sel;
        }
        if (n > darts_wanted)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-9 * hi) break;
    }
    mask.selected = std::move(best);
    mask.radius_scale = best_scale;
    return mask;
}

// ---------------------------------------------------------------------------
// Operator

FourierSamplingOperator make_fourier_operator(SamplingMask mask, double acceleration) {
    if (!mask.dims.valid() || mask.selected.size() != mask.dims.count())
        throw DimensionError("make_fourier_operator: mask does not match its grid");
    FourierSamplingOperator op;
    op.dims = mask.dims;
    op.acceleration = acceleration;
    op.mask = std::move(mask);
    return op;
}

Measurement apply_fourier_operator(std::span<const double> object_image, const FourierSamplingOperator& op) {
    require_same_size(object_image.size(), op.dims.count(), "apply_fourier_operator");
    require_same_size(op.mask.selected.size(), op.dims.count(), "apply_fourier_operator mask");
    const auto spectrum = dft2d(object_image, op.dims);
    const std::size_t kept = op.mask.count();
    Measurement out{std::vector<double>(2 * kept), Layout::stacked_complex, op.dims};
    std::size_t j = 0;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (!op.mask.selected[i]) continue;
        out.data[j] = spectrum[i].real();
        out.data[kept + j] = spectrum[i].imag();
        ++j;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

void write_mask_pbm(const std::filesystem::path& path, const SamplingMask& mask) {
    std::ostringstream header;
    header << "P4\n" << mask.dims.width << ' ' << mask.dims.height << '\n';
    const std::string h = header.str();
    std::vector<unsigned char> bytes(h.begin(), h.end());
    const int row_bytes = (mask.dims.width + 7) / 8;
    for (int v = 0; v < mask.dims.height; ++v) {
        std::vector<unsigned char> row(static_cast<std::size_t>(row_bytes), 0);
        for (int u = 0; u < mask.dims.width; ++u)
            if (mask.selected[static_cast<std::size_t>(v) * mask.dims.width + u]) row[u / 8] |= 0x80 >> (u % 8);
        bytes.insert(bytes.end(), row.begin(), row.end());
    }
    write_file_atomic(path, bytes);
}

SamplingMask read_mask_pbm(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    const std::string what = "mask " + path.string();
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&] {
        skip_space();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw FormatError(what + ": malformed header");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
        return static_cast<int>(v);
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '1' && bytes[1] != '4'))
        throw FormatError(what + ": not a P1/P4 bitmap");
    const bool binary = bytes[1] == '4';
    pos = 2;
    SamplingMask mask;
    mask.dims.width = read_int();
    mask.dims.height = read_int();
    if (!mask.dims.valid()) throw FormatError(what + ": invalid dimensions");
    mask.selected.assign(mask.dims.count(), 0);
    if (binary) {
        ++pos;  // single whitespace after the header
        const std::size_t row_bytes = static_cast<std::size_t>((mask.dims.width + 7) / 8);
        if (bytes.size() < pos + row_bytes * mask.dims.height) throw FormatError(what + ": truncated raster");
        for (int v = 0; v < mask.dims.height; ++v)
            for (int u = 0; u < mask.dims.width; ++u)
                mask.selected[static_cast<std::size_t>(v) * mask.dims.width + u] =
                    (bytes[pos + v * row_bytes + u / 8] >> (7 - u % 8)) & 1;
    } else {
        for (auto& s : mask.selected) {
            skip_space();
            if (pos >= bytes.size() || (bytes[pos] != '0' && bytes[pos] != '1'))
                throw FormatError(what + ": truncated raster");
            s = bytes[pos++] == '1';
        }
    }
    return mask;
}

void to_json(nlohmann::json& j, const SamplingMask& m) {
    auto rows = nlohmann::json::array();
    for (int v = 0; v < m.dims.height; ++v) {
        auto row = nlohmann::json::array();
        for (int u = 0; u < m.dims.width; ++u) row.push_back(int(m.selected[static_cast<std::size_t>(v) * m.dims.width + u]));
        rows.push_back(std::move(row));
    }
    j = nlohmann::json{{"dims", {m.dims.width, m.dims.height}},
                       {"radius_scale", m.radius_scale},
                       {"profile",
                        {{"base", m.profile.base},
                         {"slope", m.profile.slope},
                         {"calibration_size", m.profile.calibration_size}}},
                       {"mask", rows}};
}

void from_json(const nlohmann::json& j, SamplingMask& m) {
    m = SamplingMask{};
    m.dims = {j.at("dims").at(0).get<int>(), j.at("dims").at(1).get<int>()};
    m.radius_scale = j.value("radius_scale", 0.0);
    if (j.contains("profile")) {
        const auto& p = j["profile"];
        m.profile.base = p.value("base", m.profile.base);
        m.profile.slope = p.value("slope", m.profile.slope);
        m.profile.calibration_size = p.value("calibration_size", m.profile.calibration_size);
    }
    const auto& rows = j.at("mask");
    if (rows.size() != static_cast<std::size_t>(m.dims.height)) throw FormatError("mask json: row count mismatch");
    m.selected.reserve(m.dims.count());
    for (const auto& row : rows) {
        if (row.size() != static_cast<std::size_t>(m.dims.width)) throw FormatError("mask json: row length mismatch");
        for (const auto& b : row) m.selected.push_back(b.get<int>() != 0);
    }
}

}  // namespace iomc
