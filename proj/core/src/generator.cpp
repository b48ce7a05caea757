#include "iomc/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iomc {

bool LatentVector::finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

LatentVector LatentVector::prior_draw(std::size_t k, Rng& rng) {
    LatentVector z{std::vector<double>(k)};
    fill_standard_normal(rng, z.values);
    return z;
}

std::string layer_name(const Layer& layer) {
    static constexpr const char* names[] = {"dense", "leaky_relu", "tanh", "reshape", "upsample2x_nearest", "conv2d"};
    return names[layer.index()];
}

namespace {

bool all_finite(const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

std::string where(std::size_t index, const Layer& layer) {
    return "layer " + std::to_string(index) + " (" + layer_name(layer) + ")";
}

}  // namespace

GeneratorNet::GeneratorNet(std::uint32_t latent_dim, TensorShape output_shape, std::vector<Layer> layers,
                           OutputTransform transform)
    : latent_dim_(latent_dim), output_shape_(output_shape), layers_(std::move(layers)), transform_(transform) {
    if (latent_dim_ == 0) throw DimensionError("generator: latent dimension must be >= 1");
    if (output_shape_.count() == 0) throw DimensionError("generator: empty output shape");

    TensorShape shape{1, 1, latent_dim_};
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& layer = layers_[i];
        std::visit(
            [&](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    if (l.in != shape.count())
                        throw DimensionError(where(i, layer) + ": expects input length " + std::to_string(l.in) +
                                             " but receives " + std::to_string(shape.count()));
                    if (l.weights.size() != std::size_t(l.in) * l.out || l.bias.size() != l.out)
                        throw DimensionError(where(i, layer) + ": weight/bias sizes do not match " +
                                             std::to_string(l.out) + "x" + std::to_string(l.in));
                    if (!all_finite(l.weights) || !all_finite(l.bias))
                        throw std::invalid_argument(where(i, layer) + ": non-finite weights");
                    shape = {1, 1, l.out};
                } else if constexpr (std::is_same_v<T, LeakyReluLayer>) {
                    if (!std::isfinite(l.alpha)) throw std::invalid_argument(where(i, layer) + ": non-finite alpha");
                } else if constexpr (std::is_same_v<T, ReshapeLayer>) {
                    if (l.shape.count() != shape.count())
                        throw DimensionError(where(i, layer) + ": cannot reshape " + std::to_string(shape.count()) +
                                             " values into " + std::to_string(l.shape.count()));
                    shape = l.shape;
                } else if constexpr (std::is_same_v<T, Upsample2xLayer>) {
                    shape.height *= 2;
                    shape.width *= 2;
                } else if constexpr (std::is_same_v<T, Conv2dLayer>) {
                    if (l.kernel != 3 && l.kernel != 5)
                        throw DimensionError(where(i, layer) + ": kernel must be 3 or 5");
                    if (l.in_channels != shape.channels)
                        throw DimensionError(where(i, layer) + ": expects " + std::to_string(l.in_channels) +
                                             " input channels but receives " + std::to_string(shape.channels));
                    if (l.weights.size() != std::size_t(l.out_channels) * l.in_channels * l.kernel * l.kernel ||
                        l.bias.size() != l.out_channels)
                        throw DimensionError(where(i, layer) + ": weight/bias sizes do not match the kernel shape");
                    if (!all_finite(l.weights) || !all_finite(l.bias))
                        throw std::invalid_argument(where(i, layer) + ": non-finite weights");
                    shape.channels = l.out_channels;
                }
            },
            layer);
    }
    if (shape.count() != output_shape_.count())
        throw DimensionError("generator: final layer produces " + std::to_string(shape.count()) +
                             " values but the header declares " + std::to_string(output_shape_.count()));
}

std::vector<double> GeneratorNet::forward(std::span<const double> z) const {
    if (z.size() != latent_dim_)
        throw DimensionError("generator: latent vector has length " + std::to_string(z.size()) + ", expected " +
                             std::to_string(latent_dim_));
    std::vector<double> cur(z.begin(), z.end());
    std::vector<double> next;
    TensorShape shape{1, 1, latent_dim_};

    for (const Layer& layer : layers_) {
        std::visit(
            [&](const auto& l) {
                using T = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<T, DenseLayer>) {
                    next.assign(l.out, 0.0);
                    for (std::uint32_t o = 0; o < l.out; ++o) {
                        const float* w = l.weights.data() + std::size_t(o) * l.in;
                        double acc = l.bias[o];
                        for (std::uint32_t j = 0; j < l.in; ++j) acc += double(w[j]) * cur[j];
                        next[o] = acc;
                    }
                    cur.swap(next);
                    shape = {1, 1, l.out};
                } else if constexpr (std::is_same_v<T, LeakyReluLayer>) {
                    const double alpha = l.alpha;
                    for (double& v : cur)
                        if (v < 0.0) v *= alpha;
                } else if constexpr (std::is_same_v<T, TanhLayer>) {
                    for (double& v : cur) v = std::tanh(v);
                } else if constexpr (std::is_same_v<T, ReshapeLayer>) {
                    shape = l.shape;
                } else if constexpr (std::is_same_v<T, Upsample2xLayer>) {
                    const std::size_t H = shape.height, W = shape.width;
                    next.assign(cur.size() * 4, 0.0);
                    for (std::size_t c = 0; c < shape.channels; ++c)
                        for (std::size_t y = 0; y < 2 * H; ++y)
                            for (std::size_t x = 0; x < 2 * W; ++x)
                                next[(c * 2 * H + y) * 2 * W + x] = cur[(c * H + y / 2) * W + x / 2];
                    cur.swap(next);
                    shape.height *= 2;
                    shape.width *= 2;
                } else if constexpr (std::is_same_v<T, Conv2dLayer>) {
                    const int H = static_cast<int>(shape.height), W = static_cast<int>(shape.width);
                    const int K = static_cast<int>(l.kernel), pad = K / 2;
                    next.assign(std::size_t(l.out_channels) * H * W, 0.0);
                    for (std::uint32_t o = 0; o < l.out_channels; ++o) {
                        double* dst = next.data() + std::size_t(o) * H * W;
                        std::fill(dst, dst + std::size_t(H) * W, double(l.bias[o]));
                        for (std::uint32_t i = 0; i < l.in_channels; ++i) {
                            const double* src = cur.data() + std::size_t(i) * H * W;
                            const float* w = l.weights.data() + (std::size_t(o) * l.in_channels + i) * K * K;
                            for (int ky = 0; ky < K; ++ky) {
                                for (int kx = 0; kx < K; ++kx) {
                                    const double wk = w[ky * K + kx];
                                    const int dy = ky - pad, dx = kx - pad;
                                    const int y0 = std::max(0, -dy), y1 = std::min(H, H - dy);
                                    const int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                                    for (int y = y0; y < y1; ++y) {
                                        const double* s = src + std::size_t(y + dy) * W + dx;
                                        double* d = dst + std::size_t(y) * W;
                                        for (int x = x0; x < x1; ++x) d[x] += wk * s[x];
                                    }
                                }
                            }
                        }
                    }
                    cur.swap(next);
                    shape.channels = l.out_channels;
                }
            },
            layer);
    }
    if (transform_ == OutputTransform::tanh_to_unit)
        for (double& v : cur) v = 0.5 * (v + 1.0);
    return cur;
}

std::vector<double> generator_forward(const GeneratorNet& net, const LatentVector& z) { return net.forward(z.values); }

GeneratorNet make_linear_generator(const Eigen::MatrixXd& W, const Eigen::VectorXd& c,
                                   std::optional<GridSize> output_grid) {
    if (W.rows() != c.size())
        throw DimensionError("make_linear_generator: W has " + std::to_string(W.rows()) + " rows but c has " +
                             std::to_string(c.size()) + " entries");
    if (W.cols() == 0) throw DimensionError("make_linear_generator: W must have at least one column");
    DenseLayer dense;
    dense.in = static_cast<std::uint32_t>(W.cols());
    dense.out = static_cast<std::uint32_t>(W.rows());
    dense.weights.resize(std::size_t(dense.in) * dense.out);
    dense.bias.resize(dense.out);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
        for (Eigen::Index k = 0; k < W.cols(); ++k) dense.weights[std::size_t(r) * dense.in + k] = float(W(r, k));
        dense.bias[r] = float(c(r));
    }
    TensorShape shape{1, 1, dense.out};
    if (output_grid) {
        if (output_grid->count() != dense.out)
            throw DimensionError("make_linear_generator: output grid does not match the row count of W");
        shape = {1, std::uint32_t(output_grid->height), std::uint32_t(output_grid->width)};
    }
    return GeneratorNet(dense.in, shape, {std::move(dense)});
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> linear_generator_weights(const GeneratorNet& net) {
    if (net.layers().size() != 1 || !std::holds_alternative<DenseLayer>(net.layers().front()) ||
        net.output_transform() != OutputTransform::none)
        throw std::invalid_argument("linear_generator_weights: not a single dense layer generator");
    const auto& d = std::get<DenseLayer>(net.layers().front());
    Eigen::MatrixXd W(d.out, d.in);
    Eigen::VectorXd c(d.out);
    for (std::uint32_t r = 0; r < d.out; ++r) {
        for (std::uint32_t k = 0; k < d.in; ++k) W(r, k) = d.weights[std::size_t(r) * d.in + k];
        c(r) = d.bias[r];
    }
    return {W, c};
}

void SomBinding::validate() const {
    if (mode == SomDomain::object && !imaging)
        throw std::invalid_argument("SOM binding: object-domain mode requires an imaging operator");
}

Measurement generated_background(const GeneratorNet& net, const SomBinding& binding, const LatentVector& z) {
    binding.validate();
    std::vector<double> object = net.forward(z.values);
    if (binding.mode == SomDomain::object) {
        require_same_size(object.size(), operator_input_size(*binding.imaging), "generated_background");
        return apply_operator(*binding.imaging, object);
    }
    const auto& s = net.output_shape();
    GridSize dims{static_cast<int>(s.width), static_cast<int>(s.height * s.channels)};
    return Measurement{std::move(object), Layout::real, dims};
}

}  // namespace iomc
