#include <limits>

#include "binary_io.hpp"
#include "iomc/imaging.hpp"

namespace iomc {

namespace {
constexpr std::string_view kMagic = "IOMM";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_measurement(const std::filesystem::path& path, const Measurement& m) {
    m.validate();
    detail::ByteWriter w;
    w.magic(kMagic);
    w.u32(kVersion);
    w.u8(static_cast<std::uint8_t>(m.layout));
    w.u32(static_cast<std::uint32_t>(m.dims.width));
    w.u32(static_cast<std::uint32_t>(m.dims.height));
    w.u64(m.data.size());
    for (double v : m.data) w.f32(static_cast<float>(v));
    write_file_atomic(path, w.buffer());
}

Measurement read_measurement(const std::filesystem::path& path) {
    const std::string what = "measurement " + path.string();
    detail::ByteReader r(read_file_bytes(path));
    r.expect_magic(kMagic, what);
    if (const auto v = r.u32(what); v != kVersion)
        throw FormatError(what + ": unsupported version " + std::to_string(v));
    const auto layout = r.u8(what);
    if (layout > 1) throw FormatError(what + ": unknown layout tag " + std::to_string(layout));

    Measurement m;
    m.layout = static_cast<Layout>(layout);
    m.dims.width = static_cast<int>(r.u32(what));
    m.dims.height = static_cast<int>(r.u32(what));
    const auto count = r.u64(what);
    r.need(count * 4, what);
    m.data.resize(count);
    for (auto& v : m.data) v = r.f32(what);
    if (!r.at_end()) throw FormatError(what + ": trailing bytes");
    m.validate();
    return m;
}

}  // namespace iomc
