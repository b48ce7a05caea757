#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iomc/imaging.hpp"
#include "iomc/object_model.hpp"

namespace iomc {

struct ChainRecord;

/// One SKE/BKS binary detection experiment:
///   H0: g = b + n,   H1: g = b + s + n.
struct DetectionTask {
    Measurement signal;
    NoiseModel noise;
    /// Imaging system for the lumpy-parameter chain.
    std::optional<GaussianPrfSystem> prf_system;
    /// Object model for the lumpy-parameter chain.
    std::optional<LumpyModelParams> lumpy;
    std::string name;

    void validate() const;
};

/// Test statistics under each hypothesis; higher means "signal present".
struct ObserverScoreSet {
    std::vector<double> h0;
    std::vector<double> h1;

    void validate() const;
};

/// log Lambda_BKE(g | b) = (g - b - s/2)^T s / sigma^2 for i.i.d. Gaussian noise.
double log_bke_likelihood_ratio(std::span<const double> g, std::span<const double> b, std::span<const double> s,
                                double sigma);

/// log of the mean of exp(samples), max-shifted. Throws on an empty range.
double log_mean_exp(std::span<const double> log_values);

/// log of the Monte Carlo IO estimate: mean of Lambda_BKE over post-burn-in samples.
double estimate_log_likelihood_ratio(const ChainRecord& chain);

/// Unbiased sample covariance (divide by n - 1) of equally sized samples.
Eigen::MatrixXd sample_covariance(std::span<const Measurement> samples);
Eigen::MatrixXd sample_covariance(std::span<const std::vector<double>> samples);

/// Hotelling template: solves (sigma^2 I + K_b + eps I) w = s with
/// eps = loading * trace(K_b) / M. K_b must be symmetric.
Eigen::VectorXd ho_template(const Eigen::MatrixXd& K_b, double sigma, std::span<const double> s,
                            double loading = 1e-6);

/// w^T g
double ho_test_statistic(std::span<const double> w, std::span<const double> g);

/// CSV with header case_id,hypothesis,score. `case_ids` parallels h0 then h1;
/// when empty, ids are 0..n0+n1-1 in that order.
std::string scores_to_csv(const ObserverScoreSet& scores, std::span<const std::size_t> case_ids = {});
void write_scores_csv(const std::filesystem::path& path, const ObserverScoreSet& scores,
                      std::span<const std::size_t> case_ids = {});

}  // namespace iomc
