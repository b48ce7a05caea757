#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "iomc/imaging.hpp"
#include "iomc/operators.hpp"
#include "iomc/rng.hpp"

namespace iomc {

/// Latent state z in R^k with a standard normal prior.
struct LatentVector {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool finite() const;

    static LatentVector prior_draw(std::size_t k, Rng& rng);

    friend bool operator==(const LatentVector&, const LatentVector&) = default;
};

/// Activation shape flowing between layers; dense layers see it flattened.
struct TensorShape {
    std::uint32_t channels = 1;
    std::uint32_t height = 1;
    std::uint32_t width = 1;

    std::size_t count() const { return std::size_t(channels) * height * width; }
    friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

struct DenseLayer {
    std::uint32_t in = 0;
    std::uint32_t out = 0;
    std::vector<float> weights;  // out x in, row-major
    std::vector<float> bias;     // out
};

struct LeakyReluLayer {
    float alpha = 0.2f;
};

struct TanhLayer {};

struct ReshapeLayer {
    TensorShape shape;
};

struct Upsample2xLayer {};

/// 'Same'-padded stride-1 convolution, weights [out][in][ky][kx].
struct Conv2dLayer {
    std::uint32_t in_channels = 0;
    std::uint32_t out_channels = 0;
    std::uint32_t kernel = 3;
    std::vector<float> weights;
    std::vector<float> bias;
};

using Layer = std::variant<DenseLayer, LeakyReluLayer, TanhLayer, ReshapeLayer, Upsample2xLayer, Conv2dLayer>;

std::string layer_name(const Layer& layer);

/// Applied after the last layer.
enum class OutputTransform : std::uint8_t {
    none = 0,
    /// y = (x + 1) / 2, maps a final tanh onto [0, 1]
    tanh_to_unit = 1,
};

/// Immutable feed-forward generator G(z; theta) : R^k -> R^N. Weights are
/// stored as float32 and widened to double for evaluation.
class GeneratorNet {
public:
    GeneratorNet(std::uint32_t latent_dim, TensorShape output_shape, std::vector<Layer> layers,
                 OutputTransform transform = OutputTransform::none);

    std::uint32_t latent_dim() const { return latent_dim_; }
    const TensorShape& output_shape() const { return output_shape_; }
    std::size_t output_size() const { return output_shape_.count(); }
    const std::vector<Layer>& layers() const { return layers_; }
    OutputTransform output_transform() const { return transform_; }

    /// Deterministic forward pass. Reentrant; each call owns its scratch.
    std::vector<double> forward(std::span<const double> z) const;

private:
    std::uint32_t latent_dim_;
    TensorShape output_shape_;
    std::vector<Layer> layers_;
    OutputTransform transform_;
};

std::vector<double> generator_forward(const GeneratorNet& net, const LatentVector& z);

/// Single dense layer G(z) = W z + c. Under z ~ N(0, I) the output is N(c, W W^T).
/// `output_grid` shapes the output as a 1-channel image; defaults to a column.
GeneratorNet make_linear_generator(const Eigen::MatrixXd& W, const Eigen::VectorXd& c,
                                   std::optional<GridSize> output_grid = std::nullopt);

/// Weights of a single-dense-layer net widened to double (W, c).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> linear_generator_weights(const GeneratorNet& net);

// GSOM weight file (all integers little-endian):
//   "GSOM", u32 version (1), u32 k, u32 out_channels, u32 out_height, u32 out_width,
//   u8 output transform, u32 layer count; per layer a u8 tag followed by
//   tag 1 dense:      u32 in, u32 out, f32[out*in] weights, f32[out] bias
//   tag 2 leaky_relu: f32 alpha
//   tag 3 tanh:       -
//   tag 4 reshape:    u32 channels, u32 height, u32 width
//   tag 5 upsample2x: -
//   tag 6 conv2d:     u32 in_channels, u32 out_channels, u32 kernel, f32[out*in*kernel*kernel] weights, f32[out] bias
void save_generator(const std::filesystem::path& path, const GeneratorNet& net);
GeneratorNet load_generator(const std::filesystem::path& path);
std::vector<unsigned char> encode_generator(const GeneratorNet& net);
GeneratorNet decode_generator(std::vector<unsigned char> bytes, const std::string& source = "GSOM");

/// Where generated samples live: object domain needs an imaging operator.
enum class SomDomain : std::uint8_t { object = 0, image = 1 };

struct SomBinding {
    SomDomain mode = SomDomain::image;
    std::optional<ImagingOperator> imaging;

    void validate() const;
};

/// Background data b(z): G(z) in image-domain mode, H G(z) in object-domain mode.
Measurement generated_background(const GeneratorNet& net, const SomBinding& binding, const LatentVector& z);

}  // namespace iomc
