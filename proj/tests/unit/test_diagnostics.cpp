#include <cmath>
#include <limits>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "iomc/diagnostics.hpp"
#include "iomc/types.hpp"
#include "iomc/rng.hpp"
#include "oracles.hpp"

using namespace iomc;

namespace {

ChainEnsemble iid_ensemble(std::size_t M, std::size_t N, std::uint64_t seed) {
    Rng rng(seed);
    ChainEnsemble e;
    for (std::size_t m = 0; m < M; ++m) {
        std::vector<double> c(N);
        fill_standard_normal(rng, c);
        e.chains.push_back(std::move(c));
    }
    return e;
}

}  // namespace

TEST(Psfr, HandCase) {
    const ChainEnsemble e{{{0.0, 2.0}, {1.0, 3.0}}};
    EXPECT_NEAR(psfr(e), std::sqrt(0.75), 1e-12);
    EXPECT_NEAR(psfr(e), oracle::psfr_textbook(e.chains), 1e-12);
}

TEST(Psfr, ConstantChains) {
    EXPECT_EQ(psfr(ChainEnsemble{{{2.0, 2.0, 2.0}, {2.0, 2.0, 2.0}}}), 1.0);
    EXPECT_EQ(psfr(ChainEnsemble{{{1.0, 1.0}, {2.0, 2.0}}}), std::numeric_limits<double>::infinity());
}

TEST(Psfr, InvalidEnsembles) {
    EXPECT_THROW(psfr(ChainEnsemble{{{1.0, 2.0}}}), std::invalid_argument);
    EXPECT_THROW(psfr(ChainEnsemble{{{1.0, 2.0}, {1.0, 2.0, 3.0}}}), DimensionError);
}

TEST(Psfr, MatchesTextbookOnRandomEnsembles) {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        ChainEnsemble e = iid_ensemble(2 + t % 5, 3 + t * 7, 100 + t);
        for (std::size_t m = 0; m < e.chain_count(); ++m)
            for (double& v : e.chains[m]) v += 0.3 * double(m);
        EXPECT_NEAR(psfr(e), oracle::psfr_textbook(e.chains), 1e-10);
    }
}

TEST(Psfr, FiveLongIidChainsBelowThreshold) {
    const double r = psfr(iid_ensemble(5, 10000, 42));
    EXPECT_GE(r, 0.99);
    EXPECT_LT(r, kPsfrThreshold);
}

TEST(Psfr, ShiftAndScaleInvariance) {
    ChainEnsemble e = iid_ensemble(4, 500, 3);
    for (double& v : e.chains[1]) v += 0.2;
    const double base = psfr(e);
    ChainEnsemble shifted = e, scaled = e;
    for (auto& c : shifted.chains)
        for (double& v : c) v += 1000.0;
    for (auto& c : scaled.chains)
        for (double& v : c) v *= -3.5;
    EXPECT_NEAR(psfr(shifted), base, 1e-9);
    EXPECT_NEAR(psfr(scaled), base, 1e-12);
}

TEST(Psfr, ApproachesOneWithLength) {
    double prev_gap = std::numeric_limits<double>::infinity();
    for (std::size_t N : {100u, 1000u, 10000u}) {
        double gap = 0.0;
        for (int rep = 0; rep < 20; ++rep) gap += std::abs(psfr(iid_ensemble(5, N, 1000 * N + rep)) - 1.0) / 20.0;
        EXPECT_LT(gap, prev_gap);
        prev_gap = gap;
    }
}

TEST(Psfr, OfExpHandlesHugeLogs) {
    ChainEnsemble logs = iid_ensemble(3, 200, 8);
    ChainEnsemble direct = logs;
    for (auto& c : direct.chains)
        for (double& v : c) v = std::exp(v);
    for (auto& c : logs.chains)
        for (double& v : c) v += 5000.0;
    const double r = psfr_of_exp(logs);
    EXPECT_TRUE(std::isfinite(r));
    EXPECT_NEAR(r, psfr(direct), 1e-9);
}

TEST(RunningPsfr, PrefixesAndConvergence) {
    ChainEnsemble e = iid_ensemble(5, 2050, 9);
    const auto trace = running_psfr(e, 500, false);
    EXPECT_EQ(trace.iterations, (std::vector<std::size_t>{500, 1000, 1500, 2000, 2050}));
    ChainEnsemble prefix;
    for (const auto& c : e.chains) prefix.chains.emplace_back(c.begin(), c.begin() + 1000);
    EXPECT_DOUBLE_EQ(trace.values[1], psfr(prefix));

    PsfrTrace t{{10, 20, 30, 40}, {1.5, 1.005, 1.02, 1.001}};
    EXPECT_EQ(convergence_iteration(t), 40u);
    t.values = {1.5, 1.2, 1.1, 1.05};
    EXPECT_FALSE(convergence_iteration(t).has_value());
    t.values = {1.0, 1.0, 1.0, 1.0};
    EXPECT_EQ(convergence_iteration(t), 10u);
}

TEST(Autocorrelation, Examples) {
    Rng rng(1);
    std::vector<double> x(100);
    fill_standard_normal(rng, x);
    EXPECT_DOUBLE_EQ(autocorrelation(x, 5)[0], 1.0);

    std::vector<double> alt(1000);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? -1.0 : 1.0;
    EXPECT_NEAR(autocorrelation(alt, 1)[1], -999.0 / 1000.0, 1e-12);

    std::vector<double> white(100000);
    fill_standard_normal(rng, white);
    EXPECT_LT(std::abs(autocorrelation(white, 3)[1]), 0.02);

    const auto flat = autocorrelation(std::vector<double>(10, 4.0), 3);
    EXPECT_EQ(flat, (std::vector<double>{1, 1, 1, 1}));
    EXPECT_THROW(autocorrelation(x, 100), std::invalid_argument);
}

TEST(Autocorrelation, Ar1Process) {
    Rng rng(4);
    std::normal_distribution<double> d(0.0, 1.0);
    const double phi = 0.8;
    std::vector<double> x(200000);
    x[0] = d(rng);
    for (std::size_t i = 1; i < x.size(); ++i) x[i] = phi * x[i - 1] + d(rng);
    const auto ac = autocorrelation(x, 3);
    for (int lag = 1; lag <= 3; ++lag) EXPECT_NEAR(ac[lag], std::pow(phi, lag), 0.02);
}

TEST(Report, JsonShape) {
    ChainEnsemble e = iid_ensemble(3, 1000, 5);
    const auto report = diagnose_chains(e, 250, 10);
    const nlohmann::json j = to_json(report);
    for (const char* key : {"psfr_trace", "final_psfr", "converged", "autocorrelation"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["autocorrelation"].size(), 11u);
    EXPECT_EQ(j["psfr_trace"].size(), 4u);
    EXPECT_EQ(j["converged"].get<bool>(), report.final_psfr < kPsfrThreshold);
}
