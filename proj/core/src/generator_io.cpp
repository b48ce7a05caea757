#include <cmath>

#include "binary_io.hpp"
#include "iomc/generator.hpp"

namespace iomc {

namespace {

constexpr std::string_view kMagic = "GSOM";
constexpr std::uint32_t kVersion = 1;

enum Tag : std::uint8_t { kDense = 1, kLeakyRelu = 2, kTanh = 3, kReshape = 4, kUpsample = 5, kConv2d = 6 };

void put_floats(detail::ByteWriter& w, const std::vector<float>& v) {
    for (float x : v) w.f32(x);
}

std::vector<float> get_floats(detail::ByteReader& r, std::size_t n, const std::string& what) {
    r.need(n * 4, what);
    std::vector<float> v(n);
    for (float& x : v) {
        x = r.f32(what);
        if (!std::isfinite(x)) throw FormatError(what + ": non-finite weight");
    }
    return v;
}

}  // namespace

std::vector<unsigned char> encode_generator(const GeneratorNet& net) {
    detail::ByteWriter w;
    w.magic(kMagic);
    w.u32(kVersion);
    w.u32(net.latent_dim());
    w.u32(net.output_shape().channels);
    w.u32(net.output_shape().height);
    w.u32(net.output_shape().width);
    w.u8(static_cast<std::uint8_t>(net.output_transform()));
    w.u32(static_cast<std::uint32_t>(net.layers().size()));
    for (const Layer& layer : net.layers()) {
        std::visit(
            [&](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    w.u8(kDense);
                    w.u32(l.in);
                    w.u32(l.out);
                    put_floats(w, l.weights);
                    put_floats(w, l.bias);
                } else if constexpr (std::is_same_v<T, LeakyReluLayer>) {
                    w.u8(kLeakyRelu);
                    w.f32(l.alpha);
                } else if constexpr (std::is_same_v<T, TanhLayer>) {
                    w.u8(kTanh);
                } else if constexpr (std::is_same_v<T, ReshapeLayer>) {
                    w.u8(kReshape);
                    w.u32(l.shape.channels);
                    w.u32(l.shape.height);
                    w.u32(l.shape.width);
                } else if constexpr (std::is_same_v<T, Upsample2xLayer>) {
                    w.u8(kUpsample);
                } else {
                    w.u8(kConv2d);
                    w.u32(l.in_channels);
                    w.u32(l.out_channels);
                    w.u32(l.kernel);
                    put_floats(w, l.weights);
                    put_floats(w, l.bias);
                }
            },
            layer);
    }
    return w.buffer();
}

GeneratorNet decode_generator(std::vector<unsigned char> bytes, const std::string& source) {
    detail::ByteReader r(std::move(bytes));
    const std::string head = source + " header";
    r.expect_magic(kMagic, head);
    if (const auto v = r.u32(head); v != kVersion)
        throw FormatError(head + ": unsupported version " + std::to_string(v));
    const std::uint32_t k = r.u32(head);
    TensorShape out;
    out.channels = r.u32(head);
    out.height = r.u32(head);
    out.width = r.u32(head);
    const std::uint8_t transform = r.u8(head);
    if (transform > 1) throw FormatError(head + ": unknown output transform " + std::to_string(transform));
    const std::uint32_t n_layers = r.u32(head);

    std::vector<Layer> layers;
    layers.reserve(n_layers);
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        std::string what = source + " layer " + std::to_string(i);
        const std::uint8_t tag = r.u8(what);
        switch (tag) {
            case kDense: {
                what += " (dense)";
                DenseLayer l;
                l.in = r.u32(what);
                l.out = r.u32(what);
                l.weights = get_floats(r, std::size_t(l.in) * l.out, what);
                l.bias = get_floats(r, l.out, what);
                layers.emplace_back(std::move(l));
                break;
            }
            case kLeakyRelu: {
                what += " (leaky_relu)";
                LeakyReluLayer l;
                l.alpha = r.f32(what);
                if (!std::isfinite(l.alpha)) throw FormatError(what + ": non-finite alpha");
                layers.emplace_back(l);
                break;
            }
            case kTanh:
                layers.emplace_back(TanhLayer{});
                break;
            case kReshape: {
                what += " (reshape)";
                ReshapeLayer l;
                l.shape.channels = r.u32(what);
                l.shape.height = r.u32(what);
                l.shape.width = r.u32(what);
                layers.emplace_back(l);
                break;
            }
            case kUpsample:
                layers.emplace_back(Upsample2xLayer{});
                break;
            case kConv2d: {
                what += " (conv2d)";
                Conv2dLayer l;
                l.in_channels = r.u32(what);
                l.out_channels = r.u32(what);
                l.kernel = r.u32(what);
                if (l.kernel != 3 && l.kernel != 5) throw FormatError(what + ": kernel must be 3 or 5");
                l.weights = get_floats(r, std::size_t(l.out_channels) * l.in_channels * l.kernel * l.kernel, what);
                l.bias = get_floats(r, l.out_channels, what);
                layers.emplace_back(std::move(l));
                break;
            }
            default:
                throw FormatError(what + ": unknown layer tag " + std::to_string(tag));
        }
    }
    if (!r.at_end()) throw FormatError(source + ": trailing bytes after layer " + std::to_string(n_layers));
    return GeneratorNet(k, out, std::move(layers), static_cast<OutputTransform>(transform));
}

void save_generator(const std::filesystem::path& path, const GeneratorNet& net) {
    write_file_atomic(path, encode_generator(net));
}

GeneratorNet load_generator(const std::filesystem::path& path) {
    return decode_generator(read_file_bytes(path), "GSOM " + path.filename().string());
}

}  // namespace iomc
