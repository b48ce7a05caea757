#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "iomc/evaluation.hpp"
#include "iomc/rng.hpp"
#include "oracles.hpp"

using namespace iomc;

namespace {

ObserverScoreSet random_set(Rng& rng, int max_n, int levels) {
    std::uniform_int_distribution<int> n(1, max_n), v(0, levels);
    ObserverScoreSet s;
    const int n0 = n(rng), n1 = n(rng);
    for (int i = 0; i < n0; ++i) s.h0.push_back(v(rng));
    for (int i = 0; i < n1; ++i) s.h1.push_back(v(rng) + 1);
    return s;
}

double trapezoid(const RocResult& r) {
    double a = 0.0;
    for (std::size_t i = 1; i < r.points.size(); ++i)
        a += (r.points[i].fpf - r.points[i - 1].fpf) * (r.points[i].tpf + r.points[i - 1].tpf) / 2.0;
    return a;
}

}  // namespace

TEST(Auc, Examples) {
    EXPECT_EQ(auc_mann_whitney({{1, 3}, {2, 4}}), 0.75);
    EXPECT_EQ(auc_mann_whitney({{0, 1}, {2, 3}}), 1.0);
    EXPECT_EQ(auc_mann_whitney({{2, 2, 2}, {2, 2}}), 0.5);
    EXPECT_THROW(auc_mann_whitney({{}, {1.0}}), std::invalid_argument);
}

TEST(Auc, Antisymmetry) {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const auto s = random_set(rng, 15, 6);
        EXPECT_NEAR(auc_mann_whitney({s.h1, s.h0}), 1.0 - auc_mann_whitney(s), 1e-15);
    }
}

TEST(Auc, EqualsPairEnumerationExactly) {
    Rng rng(5);
    for (int t = 0; t < 1000; ++t) {
        const auto s = random_set(rng, 12, 5);
        EXPECT_EQ(auc_mann_whitney(s), oracle::pair_auc(s.h0, s.h1));
        EXPECT_EQ(empirical_roc(s).auc, auc_mann_whitney(s));
    }
}

TEST(Roc, Shape) {
    const auto r = empirical_roc({{1, 3}, {2, 4}});
    ASSERT_GE(r.points.size(), 2u);
    EXPECT_EQ(r.points.front().fpf, 0.0);
    EXPECT_EQ(r.points.front().tpf, 0.0);
    EXPECT_EQ(r.points.back().fpf, 1.0);
    EXPECT_EQ(r.points.back().tpf, 1.0);
    EXPECT_EQ(r.n0, 2u);
    EXPECT_EQ(r.n1, 2u);
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
        const auto roc = empirical_roc(random_set(rng, 20, 4));
        for (std::size_t i = 1; i < roc.points.size(); ++i) {
            EXPECT_GE(roc.points[i].fpf, roc.points[i - 1].fpf);
            EXPECT_GE(roc.points[i].tpf, roc.points[i - 1].tpf);
        }
        EXPECT_NEAR(trapezoid(roc), roc.auc, 1e-12);
    }
}

TEST(Roc, PerfectSeparationPassesThroughCorner) {
    const auto r = empirical_roc({{0.1, 0.2, 0.3}, {1.0, 2.0}});
    EXPECT_TRUE(std::any_of(r.points.begin(), r.points.end(), [](RocPoint p) { return p.fpf == 0.0 && p.tpf == 1.0; }));
    EXPECT_EQ(r.auc, 1.0);
}

TEST(Roc, AllTiedIsDiagonal) {
    const auto r = empirical_roc({{5, 5, 5}, {5, 5}});
    ASSERT_EQ(r.points.size(), 2u);
    EXPECT_EQ(r.auc, 0.5);
}

TEST(Roc, MonotoneTransformInvariance) {
    Rng rng(12);
    std::normal_distribution<double> d(0.0, 1.0);
    ObserverScoreSet s;
    for (int i = 0; i < 150; ++i) s.h0.push_back(d(rng));
    for (int i = 0; i < 120; ++i) s.h1.push_back(d(rng) + 0.8);
    s.h1.push_back(s.h0[3]);
    ObserverScoreSet t = s;
    for (double& v : t.h0) v = std::exp(3.0 * v) + 7.0;
    for (double& v : t.h1) v = std::exp(3.0 * v) + 7.0;
    const auto a = empirical_roc(s), b = empirical_roc(t);
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_EQ(a.points[i].fpf, b.points[i].fpf);
        EXPECT_EQ(a.points[i].tpf, b.points[i].tpf);
    }
    EXPECT_EQ(a.auc, b.auc);
}

TEST(AucSe, HanleyMcNeilScaling) {
    const double se1 = hanley_mcneil_se(0.8, 50, 50);
    // Duplicated scores keep the AUC; both classes double.
    Rng rng(3);
    std::normal_distribution<double> d(0.0, 1.0);
    ObserverScoreSet s;
    for (int i = 0; i < 100; ++i) s.h0.push_back(d(rng));
    for (int i = 0; i < 100; ++i) s.h1.push_back(d(rng) + 1.2);
    ObserverScoreSet dup = s;
    dup.h0.insert(dup.h0.end(), s.h0.begin(), s.h0.end());
    dup.h1.insert(dup.h1.end(), s.h1.begin(), s.h1.end());
    EXPECT_EQ(auc_mann_whitney(dup), auc_mann_whitney(s));
    const double ratio = auc_stderr(s) / auc_stderr(dup);
    EXPECT_NEAR(ratio, std::sqrt(2.0), 0.02);
    EXPECT_GT(se1, hanley_mcneil_se(0.8, 100, 100));
}

TEST(AucSe, MagnitudeAt200PerClass) {
    const double se = hanley_mcneil_se(0.84, 200, 200);
    EXPECT_GT(se, 0.015);
    EXPECT_LT(se, 0.025);
}

TEST(AucSe, BootstrapAgreesWithFormula) {
    Rng rng(9);
    std::normal_distribution<double> d(0.0, 1.0);
    ObserverScoreSet s;
    for (int i = 0; i < 200; ++i) s.h0.push_back(d(rng));
    for (int i = 0; i < 200; ++i) s.h1.push_back(d(rng) + 1.4);
    const double hm = auc_stderr(s);
    const double bs = auc_stderr(s, {AucSeMethod::bootstrap, 2000, 4});
    EXPECT_NEAR(bs, hm, 0.25 * hm);
    EXPECT_EQ(bs, auc_stderr(s, {AucSeMethod::bootstrap, 2000, 4}));
}

TEST(AucSe, BootstrapAtPerfectSeparation) {
    ObserverScoreSet s{{0, 1, 2, 3, 4}, {10, 11, 12, 13, 14}};
    EXPECT_EQ(auc_stderr(s), 0.0);
    EXPECT_EQ(auc_stderr(s, {AucSeMethod::bootstrap, 500, 1}), 0.0);
    EXPECT_GT(hanley_mcneil_se(0.99, 5, 5), 0.0);
}

TEST(RocExport, CsvAndSummary) {
    const auto r = empirical_roc({{1, 3}, {2, 4}});
    const auto csv = roc_to_csv(r);
    EXPECT_EQ(csv.rfind("fpf,tpf\n0,0\n", 0), 0u);
    const auto j = roc_summary(r);
    EXPECT_EQ(j["auc"].get<double>(), 0.75);
    EXPECT_EQ(j["n0"].get<std::size_t>(), 2u);
    EXPECT_TRUE(j.contains("auc_se"));
    EXPECT_TRUE(j.contains("n1"));
}

// ---------------------------------------------------------------------------

TEST(Spectrum, ConstantImagesOnlyDc) {
    const GridSize dims{16, 16};
    std::vector<std::vector<double>> imgs(3, std::vector<double>(256, 2.5));
    const auto s = radial_power_spectrum(imgs, dims, 8);
    EXPECT_NEAR(s.power[0], 2.5 * 2.5 * 256.0, 1e-9);
    for (std::size_t i = 1; i < s.power.size(); ++i) EXPECT_NEAR(s.power[i], 0.0, 1e-18);
}

TEST(Spectrum, WhiteNoiseFlat) {
    const GridSize dims{32, 32};
    Rng rng(6);
    std::vector<std::vector<double>> imgs(200, std::vector<double>(dims.count()));
    for (auto& im : imgs) fill_standard_normal(rng, im);
    const auto s = radial_power_spectrum(imgs, dims, 16);
    for (std::size_t i = 1; i < s.power.size(); ++i) EXPECT_NEAR(s.power[i], 1.0, 0.10) << "bin " << i;
}

TEST(Spectrum, SinusoidSingleBin) {
    const GridSize dims{32, 32};
    std::vector<double> im(dims.count());
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) im[std::size_t(y) * 32 + x] = std::cos(2.0 * std::numbers::pi * 5.0 * x / 32.0);
    const std::vector<std::vector<double>> set{im};
    const auto s = radial_power_spectrum(set, dims, 16);
    const auto peak = std::max_element(s.power.begin(), s.power.end()) - s.power.begin();
    EXPECT_EQ(peak, 5);
    for (std::size_t i = 0; i < s.power.size(); ++i)
        if (i != 5) EXPECT_LT(s.power[i], 1e-20);
}

TEST(Spectrum, OrderAndTranslationInvariance) {
    const GridSize dims{16, 16};
    Rng rng(2);
    std::vector<std::vector<double>> imgs(5, std::vector<double>(256));
    for (auto& im : imgs) fill_standard_normal(rng, im);
    auto reversed = imgs;
    std::reverse(reversed.begin(), reversed.end());
    auto shifted = imgs;
    for (std::size_t k = 0; k < imgs.size(); ++k)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                shifted[k][std::size_t((y + 5) % 16) * 16 + (x + 3) % 16] = imgs[k][std::size_t(y) * 16 + x];
    const auto a = radial_power_spectrum(imgs, dims, 8), b = radial_power_spectrum(reversed, dims, 8),
               c = radial_power_spectrum(shifted, dims, 8);
    for (std::size_t i = 0; i < a.power.size(); ++i) {
        EXPECT_NEAR(a.power[i], b.power[i], 1e-10 * a.power[i]);
        EXPECT_NEAR(a.power[i], c.power[i], 1e-10 * a.power[i]);
    }
}

TEST(Spectrum, BinCountsAndMismatch) {
    const GridSize dims{8, 8};
    const std::vector<std::vector<double>> imgs{std::vector<double>(64, 0.0)};
    const auto s = radial_power_spectrum(imgs, dims, 4);
    EXPECT_EQ(s.counts[0], 1u);
    EXPECT_EQ(s.counts[1], 8u);  // |k| in [1, 2): (+-1, 0), (0, +-1), (+-1, +-1)
    const std::vector<std::vector<double>> bad{std::vector<double>(63, 0.0)};
    EXPECT_THROW(radial_power_spectrum(bad, dims, 4), DimensionError);
}

TEST(Spectrum, BandDeviation) {
    RadialSpectrum a{{100.0, 1.1, 2.0}, {1, 4, 4}}, b{{1.0, 1.0, 2.2}, {1, 4, 4}};
    EXPECT_NEAR(max_relative_band_deviation(a, b), 0.1, 1e-12);
    EXPECT_NEAR(max_relative_band_deviation(a, b, false), 99.0, 1e-12);
}
