#include <cmath>
#include <cstring>
#include <thread>

#include <gtest/gtest.h>

#include "iomc/file_util.hpp"
#include "iomc/generator.hpp"
#include "iomc/operators.hpp"
#include "oracles.hpp"

using namespace iomc;

namespace {

std::vector<float> random_floats(Rng& rng, std::size_t n, double scale) {
    std::normal_distribution<double> d(0.0, scale);
    std::vector<float> v(n);
    for (float& x : v) x = float(d(rng));
    return v;
}

// k=6 -> dense 2*4*4 -> reshape -> leaky -> upsample -> conv3 2->3 -> tanh -> conv5 3->1
GeneratorNet small_conv_net(Rng& rng) {
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{6, 32, random_floats(rng, 6 * 32, 0.5), random_floats(rng, 32, 0.1)});
    layers.emplace_back(ReshapeLayer{{2, 4, 4}});
    layers.emplace_back(LeakyReluLayer{0.2f});
    layers.emplace_back(Upsample2xLayer{});
    layers.emplace_back(Conv2dLayer{2, 3, 3, random_floats(rng, 3 * 2 * 9, 0.3), random_floats(rng, 3, 0.1)});
    layers.emplace_back(TanhLayer{});
    layers.emplace_back(Conv2dLayer{3, 1, 5, random_floats(rng, 1 * 3 * 25, 0.2), random_floats(rng, 1, 0.1)});
    return GeneratorNet(6, {1, 8, 8}, std::move(layers));
}

// Straightforward re-statement of the layer semantics, channel-major [c][y][x].
std::vector<double> reference_forward(const GeneratorNet& net, const std::vector<double>& z) {
    std::vector<double> x = z;
    int C = 1, H = 1, W = int(z.size());
    for (const Layer& layer : net.layers()) {
        if (auto* d = std::get_if<DenseLayer>(&layer)) {
            std::vector<double> y(d->out);
            for (std::uint32_t o = 0; o < d->out; ++o) {
                double s = d->bias[o];
                for (std::uint32_t i = 0; i < d->in; ++i) s += double(d->weights[o * d->in + i]) * x[i];
                y[o] = s;
            }
            x = y;
            C = 1, H = 1, W = int(d->out);
        } else if (auto* a = std::get_if<LeakyReluLayer>(&layer)) {
            for (double& v : x) v = v > 0 ? v : double(a->alpha) * v;
        } else if (std::holds_alternative<TanhLayer>(layer)) {
            for (double& v : x) v = std::tanh(v);
        } else if (auto* r = std::get_if<ReshapeLayer>(&layer)) {
            C = int(r->shape.channels), H = int(r->shape.height), W = int(r->shape.width);
        } else if (std::holds_alternative<Upsample2xLayer>(layer)) {
            std::vector<double> y(std::size_t(C) * 4 * H * W);
            for (int c = 0; c < C; ++c)
                for (int yy = 0; yy < 2 * H; ++yy)
                    for (int xx = 0; xx < 2 * W; ++xx)
                        y[(std::size_t(c) * 2 * H + yy) * 2 * W + xx] = x[(std::size_t(c) * H + yy / 2) * W + xx / 2];
            x = y;
            H *= 2, W *= 2;
        } else if (auto* cv = std::get_if<Conv2dLayer>(&layer)) {
            const int K = int(cv->kernel), P = K / 2;
            std::vector<double> y(std::size_t(cv->out_channels) * H * W);
            for (int o = 0; o < int(cv->out_channels); ++o)
                for (int yy = 0; yy < H; ++yy)
                    for (int xx = 0; xx < W; ++xx) {
                        double s = cv->bias[o];
                        for (int i = 0; i < int(cv->in_channels); ++i)
                            for (int ky = 0; ky < K; ++ky)
                                for (int kx = 0; kx < K; ++kx) {
                                    const int sy = yy + ky - P, sx = xx + kx - P;
                                    if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
                                    s += double(cv->weights[((std::size_t(o) * cv->in_channels + i) * K + ky) * K + kx]) *
                                         x[(std::size_t(i) * H + sy) * W + sx];
                                }
                        y[(std::size_t(o) * H + yy) * W + xx] = s;
                    }
            x = y;
            C = int(cv->out_channels);
        }
    }
    if (net.output_transform() == OutputTransform::tanh_to_unit)
        for (double& v : x) v = 0.5 * (v + 1.0);
    return x;
}

}  // namespace

TEST(Generator, IdentityDense) {
    const auto net = make_linear_generator(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3));
    EXPECT_EQ(net.forward(std::vector<double>{0.5, -1.25, 2.0}), (std::vector<double>{0.5, -1.25, 2.0}));
}

TEST(Generator, DenseArithmetic) {
    Eigen::MatrixXd W(2, 2);
    W << 2, 0, 0, 3;
    Eigen::VectorXd c(2);
    c << 1, -1;
    const auto net = make_linear_generator(W, c);
    EXPECT_EQ(net.forward(std::vector<double>{1.0, 1.0}), (std::vector<double>{3.0, 2.0}));
}

TEST(Generator, LeakyRelu) {
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{2, 2, {1, 0, 0, 1}, {0, 0}});
    layers.emplace_back(LeakyReluLayer{0.2f});
    GeneratorNet net(2, {1, 1, 2}, std::move(layers));
    const auto y = net.forward(std::vector<double>{-1.0, 2.0});
    EXPECT_NEAR(y[0], -0.2, 1e-7);
    EXPECT_EQ(y[1], 2.0);
}

TEST(Generator, ConvNetMatchesReference) {
    Rng rng(5);
    const auto net = small_conv_net(rng);
    for (int t = 0; t < 10; ++t) {
        const auto z = LatentVector::prior_draw(6, rng);
        const auto y = generator_forward(net, z);
        const auto ref = reference_forward(net, z.values);
        ASSERT_EQ(y.size(), 64u);
        for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
    }
}

TEST(Generator, OutputTransformToUnit) {
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{1, 1, {1}, {0}});
    layers.emplace_back(TanhLayer{});
    GeneratorNet net(1, {1, 1, 1}, std::move(layers), OutputTransform::tanh_to_unit);
    EXPECT_NEAR(net.forward(std::vector<double>{0.0})[0], 0.5, 1e-15);
    EXPECT_NEAR(net.forward(std::vector<double>{1.0})[0], 0.5 * (std::tanh(1.0) + 1.0), 1e-12);
}

TEST(Generator, WrongLatentLength) {
    const auto net = make_linear_generator(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3));
    EXPECT_THROW(net.forward(std::vector<double>{1.0, 2.0}), DimensionError);
}

TEST(Generator, IncompatibleLayersRejected) {
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{32, 4, std::vector<float>(128, 0.f), std::vector<float>(4, 0.f)});
    EXPECT_THROW(GeneratorNet(64, {1, 1, 4}, std::move(layers)), DimensionError);
}

TEST(Generator, FiniteOnRandomDraws) {
    Rng rng(7);
    const auto net = small_conv_net(rng);
    for (int t = 0; t < 1000; ++t) {
        std::normal_distribution<double> d(0.0, 3.0);
        std::vector<double> z(6);
        for (double& v : z) v = d(rng);
        for (double v : net.forward(z)) ASSERT_TRUE(std::isfinite(v));
    }
}

TEST(Generator, ConcurrentForwardIsBitwiseEqual) {
    Rng rng(8);
    const auto net = small_conv_net(rng);
    const auto z = LatentVector::prior_draw(6, rng);
    const auto expected = generator_forward(net, z);
    std::vector<std::vector<double>> results(4);
    {
        std::vector<std::jthread> pool;
        for (int t = 0; t < 4; ++t)
            pool.emplace_back([&, t] {
                for (int i = 0; i < 200; ++i) results[t] = generator_forward(net, z);
            });
    }
    for (const auto& r : results) EXPECT_EQ(r, expected);
}

TEST(GeneratorFile, RoundTripExact) {
    oracle::TempDir dir("gsom");
    Rng rng(9);
    const auto net = small_conv_net(rng);
    save_generator(dir.path() / "g.gsom", net);
    const auto loaded = load_generator(dir.path() / "g.gsom");
    EXPECT_EQ(loaded.latent_dim(), 6u);
    EXPECT_EQ(loaded.output_shape(), net.output_shape());
    for (int t = 0; t < 10; ++t) {
        const auto z = LatentVector::prior_draw(6, rng);
        EXPECT_EQ(generator_forward(loaded, z), generator_forward(net, z));
    }
    EXPECT_EQ(encode_generator(loaded), encode_generator(net));
}

TEST(GeneratorFile, TruncationNamesLayer) {
    Rng rng(10);
    const auto bytes = encode_generator(small_conv_net(rng));
    // Cut inside the final conv2d weights.
    auto cut = bytes;
    cut.resize(bytes.size() - 20);
    try {
        decode_generator(cut, "net.gsom");
        FAIL() << "truncated file accepted";
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("layer 6"), std::string::npos) << msg;
        EXPECT_NE(msg.find("conv2d"), std::string::npos) << msg;
    }
}

TEST(GeneratorFile, BadMagicAndVersion) {
    Rng rng(11);
    auto bytes = encode_generator(small_conv_net(rng));
    auto bad = bytes;
    bad[1] = 'X';
    EXPECT_THROW(decode_generator(bad), FormatError);
    bad = bytes;
    bad[4] = 9;
    EXPECT_THROW(decode_generator(bad), FormatError);
}

TEST(GeneratorFile, HeaderLatentMismatchIsDimensionError) {
    // Header k = 64, first dense layer expects 32 inputs.
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{64, 2, std::vector<float>(128, 0.f), std::vector<float>(2, 0.f)});
    auto bytes = encode_generator(GeneratorNet(64, {1, 1, 2}, std::move(layers)));
    // Rewrite the dense `in` field (offset: 4 magic + 4 version + 4 k + 12 shape + 1 transform + 4 count + 1 tag).
    const std::size_t off = 4 + 4 + 4 + 12 + 1 + 4 + 1;
    bytes[off] = 32;
    // Drop the now-surplus 64 weights so the payload parses.
    bytes.erase(bytes.begin() + long(off + 8), bytes.begin() + long(off + 8 + 64 * 4));
    EXPECT_THROW(decode_generator(bytes), DimensionError);
}

TEST(GeneratorFile, NanWeightRejected) {
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{1, 1, {1.0f}, {0.0f}});
    auto bytes = encode_generator(GeneratorNet(1, {1, 1, 1}, std::move(layers)));
    const float nan = std::nanf("");
    std::memcpy(bytes.data() + bytes.size() - 8, &nan, 4);
    EXPECT_THROW(decode_generator(bytes), FormatError);
}

TEST(GeneratorFile, MissingFile) {
    EXPECT_ANY_THROW(load_generator("/nonexistent/dir/g.gsom"));
}

TEST(LinearGenerator, ZeroWeightsIsConstant) {
    Eigen::VectorXd c(3);
    c << 1.5, -2, 0.25;
    const auto net = make_linear_generator(Eigen::MatrixXd::Zero(3, 4), c);
    Rng rng(1);
    for (int t = 0; t < 5; ++t)
        EXPECT_EQ(generator_forward(net, LatentVector::prior_draw(4, rng)), (std::vector<double>{1.5, -2, 0.25}));
}

TEST(LinearGenerator, SampleMoments) {
    Rng rng(2);
    const int N = 4, k = 3;
    Eigen::MatrixXd W = Eigen::MatrixXd::Random(N, k);
    Eigen::VectorXd c = Eigen::VectorXd::Random(N);
    const auto net = make_linear_generator(W, c);
    const auto [Wf, cf] = linear_generator_weights(net);
    const int n = 100000;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(N);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(N, N);
    for (int t = 0; t < n; ++t) {
        const auto y = generator_forward(net, LatentVector::prior_draw(k, rng));
        Eigen::Map<const Eigen::VectorXd> v(y.data(), N);
        mean += v;
        second += (v - cf) * (v - cf).transpose();
    }
    mean /= n;
    second /= n;
    const Eigen::MatrixXd K = Wf * Wf.transpose();
    const double bound = 4.0 * std::sqrt(K.diagonal().maxCoeff()) / std::sqrt(double(n));
    for (int i = 0; i < N; ++i) EXPECT_NEAR(mean(i), cf(i), bound);
    EXPECT_LT((second - K).norm() / K.norm(), 0.05);
}

TEST(Binding, ImageDomainIdentity) {
    const auto net = make_linear_generator(Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4), GridSize{2, 2});
    SomBinding b;
    const LatentVector z{{1, 2, 3, 4}};
    const auto m = generated_background(net, b, z);
    EXPECT_EQ(m.data, z.values);
    EXPECT_EQ(m.dims, (GridSize{2, 2}));
}

TEST(Binding, ObjectDomainRequiresOperator) {
    SomBinding b;
    b.mode = SomDomain::object;
    EXPECT_THROW(b.validate(), std::invalid_argument);
}

TEST(Binding, ObjectDomainZeroObject) {
    const GridSize dims{8, 8};
    const auto net = make_linear_generator(Eigen::MatrixXd::Zero(64, 2), Eigen::VectorXd::Zero(64), dims);
    SomBinding b{SomDomain::object, discretize_prf(GaussianPrfSystem{35.0, 2.0, dims}, dims)};
    Rng rng(1);
    for (double v : generated_background(net, b, LatentVector::prior_draw(2, rng)).data) EXPECT_EQ(v, 0.0);
}

TEST(Binding, ObjectDomainFourierComposition) {
    const GridSize dims{16, 16};
    Rng rng(3);
    Eigen::MatrixXd W = Eigen::MatrixXd::Random(256, 5);
    Eigen::VectorXd c = Eigen::VectorXd::Random(256);
    const auto net = make_linear_generator(W, c, dims);
    auto op = make_fourier_operator(make_poisson_disc_mask(dims, 4.0, {1.0, 1.0, 4}, rng), 4.0);
    SomBinding b{SomDomain::object, op};
    const auto z = LatentVector::prior_draw(5, rng);
    const auto direct = apply_fourier_operator(generator_forward(net, z), op);
    EXPECT_EQ(generated_background(net, b, z), direct);
}
