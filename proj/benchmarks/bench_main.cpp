#include <benchmark/benchmark.h>

#include "iomc/fourier.hpp"
#include "iomc/generator.hpp"
#include "iomc/imaging.hpp"
#include "iomc/mcmc.hpp"
#include "iomc/object_model.hpp"
#include "iomc/rng.hpp"

using namespace iomc;

namespace {

std::vector<float> random_floats(Rng& rng, std::size_t n, double scale) {
    std::normal_distribution<double> d(0.0, scale);
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(d(rng));
    return v;
}

// 64 -> 16x8x8 -> 8x16x16 -> 1x32x32
GeneratorNet conv_net(Rng& rng) {
    std::vector<Layer> layers;
    layers.emplace_back(DenseLayer{64, 1024, random_floats(rng, 64 * 1024, 0.1), random_floats(rng, 1024, 0.1)});
    layers.emplace_back(ReshapeLayer{{16, 8, 8}});
    layers.emplace_back(LeakyReluLayer{0.2f});
    layers.emplace_back(Upsample2xLayer{});
    layers.emplace_back(Conv2dLayer{16, 8, 3, random_floats(rng, 8 * 16 * 9, 0.1), random_floats(rng, 8, 0.1)});
    layers.emplace_back(LeakyReluLayer{0.2f});
    layers.emplace_back(Upsample2xLayer{});
    layers.emplace_back(Conv2dLayer{8, 1, 3, random_floats(rng, 8 * 9, 0.1), random_floats(rng, 1, 0.1)});
    return GeneratorNet(64, {1, 32, 32}, std::move(layers));
}

}  // namespace

static void BM_PcnPropose(benchmark::State& state) {
    Rng rng(1);
    auto z = LatentVector::prior_draw(static_cast<std::size_t>(state.range(0)), rng);
    for (auto _ : state) {
        z = pcn_propose(z, 0.2, rng);
        benchmark::DoNotOptimize(z.values.data());
    }
}
BENCHMARK(BM_PcnPropose)->Arg(8)->Arg(64)->Arg(512);

static void BM_LinearGeneratorForward(benchmark::State& state) {
    Rng rng(2);
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd W = Eigen::MatrixXd::Random(n * n, 64);
    const auto net = make_linear_generator(W, Eigen::VectorXd::Zero(n * n));
    const auto z = LatentVector::prior_draw(64, rng);
    for (auto _ : state) benchmark::DoNotOptimize(generator_forward(net, z));
}
BENCHMARK(BM_LinearGeneratorForward)->Arg(32)->Arg(64);

static void BM_ConvGeneratorForward(benchmark::State& state) {
    Rng rng(3);
    const auto net = conv_net(rng);
    const auto z = LatentVector::prior_draw(64, rng);
    for (auto _ : state) benchmark::DoNotOptimize(generator_forward(net, z));
}
BENCHMARK(BM_ConvGeneratorForward);

static void BM_LumpyImaging(benchmark::State& state) {
    Rng rng(4);
    const int n = static_cast<int>(state.range(0));
    GaussianPrfSystem sys;
    sys.grid = {n, n};
    LumpyModelParams params;
    params.fov = {n, n};
    const auto real = sample_lumpy_realization(params, rng);
    for (auto _ : state) benchmark::DoNotOptimize(image_lumpy_analytic(real, sys));
}
BENCHMARK(BM_LumpyImaging)->Arg(32)->Arg(64);

static void BM_LumpyChainIteration(benchmark::State& state) {
    Rng rng(5);
    GaussianPrfSystem sys;
    sys.grid = {32, 32};
    LumpyModelParams params;
    params.fov = sys.grid;
    params.fixed_count = 3;
    GaussianSignal s;
    s.center = {16.0, 16.0};
    DetectionTask task;
    task.signal = image_signal_analytic(s, sys);
    task.noise = {NoiseKind::iid_gaussian, 15.0};
    task.prf_system = sys;
    task.lumpy = params;
    const auto g = add_noise(image_lumpy_analytic(sample_lumpy_realization(params, rng), sys), task.noise, rng);
    ChainConfig cfg;
    cfg.n_iterations = 1000;
    cfg.burn_in = 100;
    LumpyChainOptions opts;
    opts.mix = {1.0, 0.0, 0.0};
    for (auto _ : state) benchmark::DoNotOptimize(run_lumpy_chain(task, g, params, cfg, opts));
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_LumpyChainIteration)->Unit(benchmark::kMillisecond);

static void BM_Dft2d(benchmark::State& state) {
    Rng rng(6);
    const int n = static_cast<int>(state.range(0));
    std::vector<double> img(static_cast<std::size_t>(n) * n);
    fill_standard_normal(rng, img);
    for (auto _ : state) benchmark::DoNotOptimize(dft2d(img, {n, n}));
}
BENCHMARK(BM_Dft2d)->Arg(64)->Arg(128);

static void BM_FourierOperator(benchmark::State& state) {
    Rng rng(7);
    const GridSize dims{128, 128};
    auto op = make_fourier_operator(make_poisson_disc_mask(dims, 16.0, DensityProfile{}, rng), 16.0);
    std::vector<double> img(dims.count());
    fill_standard_normal(rng, img);
    for (auto _ : state) benchmark::DoNotOptimize(apply_fourier_operator(img, op));
}
BENCHMARK(BM_FourierOperator);

BENCHMARK_MAIN();
