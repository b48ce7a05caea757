#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "iomc/generator.hpp"
#include "iomc/observers.hpp"

namespace iomc::harness {

/// Linear-generator task G(z) = W z + c with identity imaging, where the IO is
/// known in closed form.
struct GaussianOracleOptions {
    std::size_t latent_dim = 8;
    GridSize grid{16, 16};
    std::size_t n0 = 100;
    std::size_t n1 = 100;
    std::uint64_t iterations = 20000;
    std::uint64_t burn_in = 2000;
    double beta = 0.5;
    bool auto_tune = true;
    double target_auc = 0.85;
    std::uint64_t seed = 1;
    std::size_t threads = 0;
    /// Zero W (constant generator) for the BKE-degenerate check.
    bool constant_generator = false;
};

struct GaussianOracleSetup {
    GeneratorNet net;
    /// Float32-rounded weights, exactly what the net evaluates.
    Eigen::MatrixXd W;
    Eigen::VectorXd c;
    Measurement signal;
    double sigma = 1.0;
    double analytic_auc = 0.5;
};

/// Phi(sqrt(s^T K_g^-1 s) / sqrt(2)) with K_g = W W^T + sigma^2 I.
double gaussian_io_auc(const Eigen::MatrixXd& W, double sigma, std::span<const double> s);

/// Exact log Lambda(g) = s^T K_g^-1 (g - c) - s^T K_g^-1 s / 2.
double gaussian_log_likelihood_ratio(const Eigen::MatrixXd& W, const Eigen::VectorXd& c, double sigma,
                                     std::span<const double> s, std::span<const double> g);

/// Builds W, c and s, and picks sigma so that the analytic AUC equals
/// target_auc (bisection). With constant_generator, W = 0 and sigma = 1.
GaussianOracleSetup make_gaussian_oracle(const GaussianOracleOptions& options);

struct GaussianOracleResult {
    double sigma = 0.0;
    double analytic_auc = 0.0;
    double estimated_auc = 0.0;
    /// AUC of the closed-form log Lambda on the same cases.
    double exact_auc = 0.0;
    double pearson_r = 0.0;
    double max_abs_error = 0.0;
    ObserverScoreSet estimated;
    ObserverScoreSet exact;
};

/// Draws n0 + n1 cases from the linear model, runs one pCN chain per case and
/// compares the estimates against the closed form.
GaussianOracleResult run_gaussian_oracle(const GaussianOracleOptions& options);

double pearson_correlation(std::span<const double> a, std::span<const double> b);

nlohmann::json to_json(const GaussianOracleResult& r);

}  // namespace iomc::harness
