#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "iomc/file_util.hpp"
#include "iomc/mcmc.hpp"
#include "oracles.hpp"

using namespace iomc;

namespace {

DetectionTask image_task(std::size_t n, double sigma, double signal_value = 1.0) {
    DetectionTask t;
    t.signal = Measurement{std::vector<double>(n, signal_value), Layout::real, {int(n), 1}};
    t.noise = {NoiseKind::iid_gaussian, sigma};
    return t;
}

DetectionTask prf_task(GridSize grid, double sigma) {
    DetectionTask t;
    GaussianPrfSystem sys;
    sys.grid = grid;
    GaussianSignal s;
    s.center = {grid.width / 2.0, grid.height / 2.0};
    t.signal = image_signal_analytic(s, sys);
    t.noise = {NoiseKind::iid_gaussian, sigma};
    t.prf_system = sys;
    return t;
}

double log_normal_density(const std::vector<double>& x, const std::vector<double>& mean, double sd) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::pow((x[i] - mean[i]) / sd, 2);
    return -0.5 * s - double(x.size()) * std::log(sd);
}

}  // namespace

TEST(Pcn, BetaOneIsIndependentDraw) {
    const LatentVector z{{5.0, -3.0}}, xi{{0.25, 0.5}};
    EXPECT_EQ(pcn_combine(z, xi, 1.0), xi);
}

TEST(Pcn, TinyBetaKeepsState) {
    Rng rng(1);
    const LatentVector z{{1.5, -2.0, 0.3}};
    const auto p = pcn_propose(z, 1e-12, rng);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p.values[i], z.values[i], 1e-9);
}

TEST(Pcn, WorkedExample) {
    const auto p = pcn_combine(LatentVector{{1.0, 0.0}}, LatentVector{{0.0, 1.0}}, 0.6);
    EXPECT_NEAR(p.values[0], 0.8, 1e-15);
    EXPECT_NEAR(p.values[1], 0.6, 1e-15);
}

TEST(Pcn, BetaOutOfRange) {
    Rng rng(1);
    const LatentVector z{{1.0}};
    EXPECT_THROW(pcn_propose(z, 0.0, rng), std::invalid_argument);
    EXPECT_THROW(pcn_propose(z, 1.5, rng), std::invalid_argument);
}

TEST(Acceptance, Examples) {
    const std::vector<double> g{0.0}, two{2.0}, one{1.0};
    EXPECT_EQ(gaussian_log_acceptance(g, two, two, 1.0), 0.0);
    EXPECT_EQ(gaussian_log_acceptance(g, one, two, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(gaussian_log_acceptance(g, two, one, 1.0), -1.5);
    EXPECT_THROW(gaussian_log_acceptance(g, std::vector<double>{1.0, 2.0}, one, 1.0), DimensionError);
}

TEST(Pcn, DetailedBalanceOnRandomPairs) {
    // pi(z) q(z'|z) a(z, z') = pi(z') q(z|z') a(z', z) with pi = N(0, I) x likelihood.
    Rng rng(31);
    const std::size_t k = 4, n = 6;
    Eigen::MatrixXd W = Eigen::MatrixXd::Random(Eigen::Index(n), Eigen::Index(k));
    const double sigma = 0.7, beta = 0.35;
    std::vector<double> g(n);
    fill_standard_normal(rng, g);
    auto b = [&](const std::vector<double>& z) {
        Eigen::Map<const Eigen::VectorXd> zv(z.data(), Eigen::Index(k));
        Eigen::VectorXd v = W * zv;
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    auto log_post = [&](const std::vector<double>& z) {
        return log_normal_density(z, std::vector<double>(k, 0.0), 1.0) + gaussian_log_likelihood(g, b(z), sigma);
    };
    auto log_q = [&](const std::vector<double>& to, const std::vector<double>& from) {
        std::vector<double> m(k);
        for (std::size_t i = 0; i < k; ++i) m[i] = std::sqrt(1 - beta * beta) * from[i];
        return log_normal_density(to, m, beta);
    };
    for (int t = 0; t < 50; ++t) {
        const auto z = LatentVector::prior_draw(k, rng);
        const auto zp = pcn_propose(z, beta, rng);
        const double fwd = log_post(z.values) + log_q(zp.values, z.values) +
                           gaussian_log_acceptance(g, b(zp.values), b(z.values), sigma);
        const double rev = log_post(zp.values) + log_q(z.values, zp.values) +
                           gaussian_log_acceptance(g, b(z.values), b(zp.values), sigma);
        EXPECT_NEAR(fwd, rev, 1e-10);
    }
}

TEST(LatentChain, FrozenChainIsConstant) {
    const auto net = make_linear_generator(Eigen::MatrixXd::Random(5, 3), Eigen::VectorXd::Zero(5));
    const auto task = image_task(5, 1.0);
    Measurement g{{0.5, 1.0, -0.2, 0.0, 2.0}, Layout::real, {5, 1}};
    ChainConfig cfg;
    cfg.n_iterations = 2000;
    cfg.burn_in = 100;
    cfg.beta = 1e-12;
    cfg.seed = 4;
    const auto rec = run_latent_chain(task, net, SomBinding{}, g, cfg);
    for (double v : rec.log_lambda) EXPECT_NEAR(v, rec.log_lambda.front(), 1e-9);
}

TEST(LatentChain, DeterministicGivenSeed) {
    const auto net = make_linear_generator(Eigen::MatrixXd::Random(5, 3), Eigen::VectorXd::Zero(5));
    const auto task = image_task(5, 1.0);
    Measurement g{{0.5, 1.0, -0.2, 0.0, 2.0}, Layout::real, {5, 1}};
    ChainConfig cfg;
    cfg.n_iterations = 3000;
    cfg.burn_in = 500;
    cfg.auto_tune = true;
    cfg.seed = 77;
    cfg.thinning = 10;
    EXPECT_EQ(run_latent_chain(task, net, SomBinding{}, g, cfg), run_latent_chain(task, net, SomBinding{}, g, cfg));
    auto other = cfg;
    other.seed = 78;
    EXPECT_NE(run_latent_chain(task, net, SomBinding{}, g, cfg).log_lambda,
              run_latent_chain(task, net, SomBinding{}, g, other).log_lambda);
}

TEST(LatentChain, RecordsEveryIteration) {
    const auto net = make_linear_generator(Eigen::MatrixXd::Random(4, 2), Eigen::VectorXd::Zero(4));
    ChainConfig cfg;
    cfg.n_iterations = 1234;
    cfg.burn_in = 34;
    cfg.thinning = 100;
    cfg.seed = 1;
    const auto rec = run_latent_chain(image_task(4, 1.0), net, SomBinding{}, {{1, 2, 3, 4}, Layout::real, {4, 1}}, cfg);
    EXPECT_EQ(rec.size(), 1234u);
    EXPECT_EQ(rec.accepted.size(), 1234u);
    EXPECT_EQ(rec.state_trace.size(), 12u);
    EXPECT_GE(rec.acceptance_rate(), 0.0);
    EXPECT_LE(rec.acceptance_rate(), 1.0);
}

TEST(LatentChain, InvalidConfigRejected) {
    const auto net = make_linear_generator(Eigen::MatrixXd::Random(4, 2), Eigen::VectorXd::Zero(4));
    ChainConfig cfg;
    cfg.n_iterations = 100;
    cfg.burn_in = 100;
    const Measurement g{{1, 2, 3, 4}, Layout::real, {4, 1}};
    EXPECT_THROW(run_latent_chain(image_task(4, 1.0), net, SomBinding{}, g, cfg), std::invalid_argument);
    cfg.burn_in = 10;
    cfg.beta = 0.0;
    EXPECT_THROW(run_latent_chain(image_task(4, 1.0), net, SomBinding{}, g, cfg), std::invalid_argument);
    cfg.beta = 0.1;
    EXPECT_THROW(run_latent_chain(image_task(3, 1.0), net, SomBinding{}, g, cfg), DimensionError);
}

TEST(LatentChain, ScalarPosteriorMatchesAnalytic) {
    // G(z) = w z + c, g = scalar; z | g ~ N(v w (g - c) / s^2, v), v = 1 / (1 + w^2 / s^2).
    const double w = 1.3, c = 0.4, sigma = 0.8, gval = 2.1;
    Eigen::MatrixXd W(1, 1);
    W << w;
    Eigen::VectorXd cv(1);
    cv << c;
    const auto net = make_linear_generator(W, cv);
    const auto [Wf, cf] = linear_generator_weights(net);
    const double wf = Wf(0, 0), c32 = cf(0);
    const double v = 1.0 / (1.0 + wf * wf / (sigma * sigma));
    const double mu = v * wf * (gval - c32) / (sigma * sigma);

    ChainConfig cfg;
    cfg.n_iterations = 105000;
    cfg.burn_in = 5000;
    cfg.beta = 0.8;
    cfg.seed = 2024;
    cfg.thinning = 1;
    const auto rec = run_latent_chain(image_task(1, sigma), net, SomBinding{}, {{gval}, Layout::real, {1, 1}}, cfg);
    std::vector<double> zs;
    for (std::size_t i = cfg.burn_in; i < rec.state_trace.size(); ++i) zs.push_back(rec.state_trace[i][0]);
    ASSERT_EQ(zs.size(), 100000u);
    std::sort(zs.begin(), zs.end());
    double ks = 0.0;
    const double n = double(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const double F = oracle::normal_cdf((zs[i] - mu) / std::sqrt(v));
        ks = std::max({ks, std::abs(F - i / n), std::abs(F - (i + 1) / n)});
    }
    EXPECT_LT(ks, 0.02);
}

TEST(LatentChain, AcceptanceDecreasesWithBeta) {
    Rng rng(5);
    const std::size_t k = 6, n = 20;
    const std::vector<double> betas{0.05, 0.1, 0.3, 0.6, 1.0};
    std::vector<double> mean_rate(betas.size(), 0.0);
    const int tasks = 5;
    for (int t = 0; t < tasks; ++t) {
        Eigen::MatrixXd W = Eigen::MatrixXd::Random(Eigen::Index(n), Eigen::Index(k)) * 2.0;
        const auto net = make_linear_generator(W, Eigen::VectorXd::Zero(Eigen::Index(n)));
        const auto z = LatentVector::prior_draw(k, rng);
        Measurement g{net.forward(z.values), Layout::real, {int(n), 1}};
        g = add_noise(g, {NoiseKind::iid_gaussian, 0.5}, rng);
        for (std::size_t i = 0; i < betas.size(); ++i) {
            ChainConfig cfg;
            cfg.n_iterations = 20000;
            cfg.burn_in = 2000;
            cfg.beta = betas[i];
            cfg.seed = derive_seed(99, t * 10 + i);
            mean_rate[i] +=
                run_latent_chain(image_task(n, 0.5), net, SomBinding{}, g, cfg).post_burn_in_acceptance_rate() / tasks;
        }
    }
    for (std::size_t i = 1; i < betas.size(); ++i) EXPECT_LE(mean_rate[i], mean_rate[i - 1]) << "beta " << betas[i];
}

TEST(LatentChain, AutoTuneFreezesAfterBurnIn) {
    const auto net = make_linear_generator(Eigen::MatrixXd::Random(8, 4) * 3.0, Eigen::VectorXd::Zero(8));
    Rng rng(3);
    Measurement g{net.forward(LatentVector::prior_draw(4, rng).values), Layout::real, {8, 1}};
    ChainConfig cfg;
    cfg.n_iterations = 20000;
    cfg.burn_in = 5000;
    cfg.beta = 1.0;
    cfg.auto_tune = true;
    cfg.seed = 5;
    const auto rec = run_latent_chain(image_task(8, 0.2), net, SomBinding{}, g, cfg);
    EXPECT_LT(rec.step, 1.0);
    EXPECT_GT(rec.post_burn_in_acceptance_rate(), 0.1);
    EXPECT_LT(rec.post_burn_in_acceptance_rate(), 0.6);
}

// ---------------------------------------------------------------------------

TEST(LumpyMoves, WalkKeepsCountAndIsSymmetric) {
    LumpyModelParams p;
    LumpyRealization s;
    s.centers = {{10, 10}, {20, 30}};
    const auto prop = lumpy_walk(s, p, 1, {0.5, -1.0});
    EXPECT_EQ(prop.state.centers.size(), 2u);
    EXPECT_EQ(prop.log_correction, 0.0);
    EXPECT_EQ(prop.state.centers[1], (Point2{20.5, 29.0}));
    EXPECT_EQ(lumpy_walk(s, p, 0, {-20.0, 0.0}).log_correction, -std::numeric_limits<double>::infinity());
}

TEST(LumpyMoves, BirthThenDeathRestoresState) {
    LumpyModelParams p;
    const LumpyMoveMix mix{0.8, 0.1, 0.1};
    LumpyRealization s;
    s.centers = {{10, 10}, {20, 30}};
    const auto born = lumpy_birth(s, p, mix, 1, {40.0, 5.0});
    EXPECT_EQ(born.state.centers.size(), 3u);
    const auto died = lumpy_death(born.state, p, mix, 1);
    EXPECT_EQ(died.state, s);
    // The pair of corrections is log(1) overall.
    EXPECT_NEAR(born.log_correction + died.log_correction, 0.0, 1e-12);
}

TEST(LumpyMoves, BirthCorrectionValue) {
    LumpyModelParams p;  // lambda = 6
    const LumpyMoveMix mix{0.8, 0.1, 0.1};
    LumpyRealization s;
    s.centers = {{1, 1}, {2, 2}, {3, 3}};
    // n = 3: prior ratio lambda / (n + 1), move ratio P_d(4) / P_b(3) = 1
    EXPECT_NEAR(lumpy_birth(s, p, mix, 0, {5, 5}).log_correction, std::log(6.0 / 4.0), 1e-12);
    // from the empty state the birth probability is 1 and the reverse death 0.1
    LumpyRealization empty;
    EXPECT_NEAR(lumpy_birth(empty, p, mix, 0, {5, 5}).log_correction, std::log(6.0 * 0.1), 1e-12);
}

TEST(LumpyMoves, ProposeNeverDeathOnEmpty) {
    LumpyModelParams p;
    const LumpyMoveMix mix{0.0, 0.5, 0.5};
    LumpyRealization empty;
    Rng rng(1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(lumpy_propose(empty, p, 1.0, mix, rng).move, LumpyMove::birth);
}

TEST(LumpyMoves, MixValidation) {
    EXPECT_THROW((LumpyMoveMix{1.0, 0.1, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((LumpyMoveMix{0.0, 0.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((LumpyMoveMix{-1.0, 0.0, 0.0}.validate()), std::invalid_argument);
}

TEST(LumpyChain, EmptyFixedCountIsConstant) {
    const auto task = prf_task({16, 16}, 5.0);
    LumpyModelParams p;
    p.fov = {16, 16};
    p.fixed_count = 0;
    Rng rng(2);
    Measurement g = add_noise(zero_like(task.signal), task.noise, rng);
    ChainConfig cfg;
    cfg.n_iterations = 500;
    cfg.burn_in = 50;
    cfg.seed = 3;
    const auto rec = run_lumpy_chain(task, g, p, cfg);
    const double expected = log_bke_likelihood_ratio(g.data, std::vector<double>(g.size(), 0.0), task.signal.data, 5.0);
    for (double v : rec.log_lambda) EXPECT_DOUBLE_EQ(v, expected);
    EXPECT_NEAR(estimate_log_likelihood_ratio(rec), expected, 1e-12);
}

TEST(LumpyChain, AcceptanceStrictlyBetweenZeroAndOne) {
    const auto task = prf_task({24, 24}, 10.0);
    LumpyModelParams p;
    p.fov = {24, 24};
    p.fixed_count = 3;
    Rng rng(8);
    const auto truth = sample_lumpy_realization(p, rng);
    Measurement g = add_noise(image_lumpy_analytic(truth, *task.prf_system), task.noise, rng);
    ChainConfig cfg;
    cfg.n_iterations = 10000;
    cfg.burn_in = 1000;
    cfg.seed = 9;
    const auto rec = run_lumpy_chain(task, g, p, cfg);
    EXPECT_GT(rec.acceptance_rate(), 0.0);
    EXPECT_LT(rec.acceptance_rate(), 1.0);
}

TEST(LumpyChain, DeterministicGivenSeed) {
    const auto task = prf_task({16, 16}, 10.0);
    LumpyModelParams p;
    p.fov = {16, 16};
    Rng rng(8);
    Measurement g = add_noise(task.signal, task.noise, rng);
    ChainConfig cfg;
    cfg.n_iterations = 3000;
    cfg.burn_in = 300;
    cfg.seed = 10;
    cfg.auto_tune = true;
    const LumpyChainOptions opt{2.0, {0.8, 0.1, 0.1}};
    EXPECT_EQ(run_lumpy_chain(task, g, p, cfg, opt), run_lumpy_chain(task, g, p, cfg, opt));
}

TEST(LumpyChain, FlatLikelihoodSamplesThePrior) {
    // With an uninformative measurement the count must follow Poisson(lambda).
    const auto task = prf_task({8, 8}, 1e7);
    LumpyModelParams p;
    p.fov = {8, 8};
    p.mean_lumps = 4.0;
    Measurement g = zero_like(task.signal);
    ChainConfig cfg;
    cfg.n_iterations = 400000;
    cfg.burn_in = 1000;
    cfg.thinning = 20;
    cfg.seed = 12;
    const auto rec = run_lumpy_chain(task, g, p, cfg, {2.0, {0.4, 0.3, 0.3}});
    std::vector<double> counts;
    double xs = 0.0, nx = 0.0;
    for (const auto& s : rec.state_trace) {
        counts.push_back(double(s.size() / 2));
        for (std::size_t i = 0; i < s.size(); i += 2) {
            xs += s[i];
            nx += 1;
        }
    }
    const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / double(counts.size());
    double var = 0.0;
    for (double c : counts) var += (c - mean) * (c - mean);
    var /= double(counts.size() - 1);
    EXPECT_NEAR(mean, 4.0, 0.15);
    EXPECT_NEAR(var, 4.0, 0.4);
    EXPECT_NEAR(xs / nx, 4.0, 0.15);
    const double p0 = double(std::count(counts.begin(), counts.end(), 0.0)) / double(counts.size());
    EXPECT_NEAR(p0, std::exp(-4.0), 0.01);
}

TEST(LumpyChain, PoissonCountRequiresBirthDeath) {
    const auto task = prf_task({8, 8}, 1.0);
    LumpyModelParams p;
    p.fov = {8, 8};
    ChainConfig cfg;
    cfg.n_iterations = 10;
    cfg.burn_in = 1;
    EXPECT_THROW(run_lumpy_chain(task, task.signal, p, cfg, {2.0, {1.0, 0.0, 0.0}}), std::invalid_argument);
    p.fixed_count = 2;
    EXPECT_THROW(run_lumpy_chain(task, task.signal, p, cfg, {2.0, {0.8, 0.1, 0.1}}), std::invalid_argument);
}

TEST(LumpyChain, IncrementalBackgroundMatchesRecomputation) {
    // The final recorded log Lambda must equal the value recomputed from the final state.
    const auto task = prf_task({20, 20}, 8.0);
    LumpyModelParams p;
    p.fov = {20, 20};
    Rng rng(4);
    Measurement g = add_noise(task.signal, task.noise, rng);
    ChainConfig cfg;
    cfg.n_iterations = 2500;
    cfg.burn_in = 100;
    cfg.seed = 6;
    const auto rec = run_lumpy_chain(task, g, p, cfg, {2.0, {0.6, 0.2, 0.2}});
    LumpyRealization s;
    s.amplitude = p.amplitude;
    s.width = p.width;
    s.fov = p.fov;
    for (std::size_t i = 0; i < rec.final_state.size(); i += 2) s.centers.push_back({rec.final_state[i], rec.final_state[i + 1]});
    const auto b = image_lumpy_analytic(s, *task.prf_system);
    EXPECT_NEAR(rec.log_lambda.back(), log_bke_likelihood_ratio(g.data, b.data, task.signal.data, 8.0), 1e-9);
}

// ---------------------------------------------------------------------------

TEST(ChainFile, RoundTrip) {
    oracle::TempDir dir("chain");
    const auto net = make_linear_generator(Eigen::MatrixXd::Random(4, 2), Eigen::VectorXd::Zero(4));
    ChainConfig cfg;
    cfg.n_iterations = 1001;
    cfg.burn_in = 100;
    cfg.thinning = 250;
    cfg.seed = 8;
    auto rec = run_latent_chain(image_task(4, 1.0), net, SomBinding{}, {{1, 2, 3, 4}, Layout::real, {4, 1}}, cfg);
    write_chain(dir.path() / "c.ioch", rec);
    const auto back = read_chain(dir.path() / "c.ioch");
    ASSERT_EQ(back.size(), rec.size());
    EXPECT_EQ(back.accepted, rec.accepted);
    EXPECT_EQ(back.burn_in, rec.burn_in);
    EXPECT_EQ(back.config, rec.config);
    EXPECT_EQ(back.final_state, rec.final_state);
    for (std::size_t i = 0; i < rec.size(); ++i) EXPECT_EQ(back.log_lambda[i], double(float(rec.log_lambda[i])));
    EXPECT_EQ(back.state_trace.size(), rec.state_trace.size());
    const auto j = chain_summary(back);
    for (const char* key : {"n_iterations", "burn_in", "seed", "step", "acceptance_rate", "log_lambda_hat"})
        EXPECT_TRUE(j.contains(key)) << key;
}

TEST(ChainFile, CorruptRejected) {
    oracle::TempDir dir("chain-bad");
    ChainRecord rec;
    rec.log_lambda = {1.0, 2.0};
    rec.accepted = {1, 0};
    rec.config.n_iterations = 2;
    rec.config.burn_in = 1;
    rec.burn_in = 1;
    write_chain(dir.path() / "c.ioch", rec);
    auto bytes = read_file_bytes(dir.path() / "c.ioch");
    bytes.resize(bytes.size() - 1);
    write_file_atomic(dir.path() / "short.ioch", bytes);
    EXPECT_THROW(read_chain(dir.path() / "short.ioch"), FormatError);
}
