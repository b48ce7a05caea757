#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "iomc/observers.hpp"
#include "iomc/types.hpp"

namespace iomc {

struct RocPoint {
    double fpf = 0.0;
    double tpf = 0.0;
};

struct RocResult {
    /// From (0, 0) to (1, 1), one point per distinct threshold in decreasing order.
    std::vector<RocPoint> points;
    double auc = 0.0;
    double auc_se = 0.0;
    std::size_t n0 = 0;
    std::size_t n1 = 0;
};

/// Threshold sweep over the union of observed scores; a case is called
/// positive when score >= threshold. Tied h0/h1 scores move both fractions in
/// one step, so trapezoid integration credits them 1/2. The AUC is computed by
/// that integration and auc_se by Hanley-McNeil.
RocResult empirical_roc(const ObserverScoreSet& scores);

/// (sum over pairs [1 if s1 > s0, 1/2 if equal]) / (n0 n1).
double auc_mann_whitney(const ObserverScoreSet& scores);

enum class AucSeMethod { hanley_mcneil, bootstrap };

struct AucSeOptions {
    AucSeMethod method = AucSeMethod::hanley_mcneil;
    std::size_t n_bootstrap = 1000;
    std::uint64_t seed = 0;
};

/// Standard error of the Mann-Whitney AUC. The bootstrap resamples each class
/// with replacement and returns the sample standard deviation of the replicates.
double auc_stderr(const ObserverScoreSet& scores, const AucSeOptions& options = {});

/// Hanley-McNeil standard error for a given AUC and class sizes.
double hanley_mcneil_se(double auc, std::size_t n0, std::size_t n1);

std::string roc_to_csv(const RocResult& roc);
/// {auc, auc_se, n0, n1}
nlohmann::json roc_summary(const RocResult& roc);

struct RadialSpectrum {
    /// Mean |DFT|^2 / (W H) per integer radial-frequency bin; bin i holds
    /// i <= |k| < i + 1 with k the signed frequency vector.
    std::vector<double> power;
    /// Number of frequency samples per bin (per image).
    std::vector<std::size_t> counts;
};

/// Radially averaged power spectrum averaged over the image set. Frequencies
/// with |k| >= n_bins are dropped. Empty bins report zero power.
RadialSpectrum radial_power_spectrum(std::span<const std::vector<double>> images, GridSize dims, std::size_t n_bins);

/// max_i |a_i - b_i| / b_i over bins with b_i > 0, skipping bin 0 when requested.
double max_relative_band_deviation(const RadialSpectrum& a, const RadialSpectrum& b, bool exclude_dc = true);

std::string spectrum_to_csv(const RadialSpectrum& spectrum);

}  // namespace iomc
