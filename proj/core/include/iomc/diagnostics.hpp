#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace iomc {

/// M >= 2 parallel chains of a scalar, all of the same length.
struct ChainEnsemble {
    std::vector<std::vector<double>> chains;

    void validate() const;
    std::size_t chain_count() const { return chains.size(); }
    std::size_t length() const { return chains.empty() ? 0 : chains.front().size(); }
};

inline constexpr double kPsfrThreshold = 1.01;

/// Potential scale reduction factor sqrt((N-1)/N + B / (N W)), with W the mean
/// within-chain variance and B = N/(M-1) sum_m (mean_m - mean)^2. Returns 1
/// when W = B = 0 and +inf when W = 0 < B. Note that for short chains the
/// value can fall below 1; its floor is sqrt((N-1)/N).
double psfr(const ChainEnsemble& ensemble);

/// PSFR of exp(log-traces). Every sample is shifted by the global maximum
/// before exponentiating, which leaves B/W unchanged.
double psfr_of_exp(const ChainEnsemble& log_traces);

/// PSFR over growing prefixes [0, n) for n = stride, 2 stride, ... and the full
/// length. `exponentiate` treats the traces as log values (see psfr_of_exp).
struct PsfrTrace {
    std::vector<std::size_t> iterations;
    std::vector<double> values;
};
PsfrTrace running_psfr(const ChainEnsemble& ensemble, std::size_t stride, bool exponentiate);

/// First prefix length after which the running PSFR stays below `threshold`.
std::optional<std::size_t> convergence_iteration(const PsfrTrace& trace, double threshold = kPsfrThreshold);

/// Biased (divide-by-N) normalized autocorrelation for lags 0..max_lag.
/// A constant trace is defined to have autocorrelation 1 at every lag.
std::vector<double> autocorrelation(std::span<const double> trace, std::size_t max_lag);

struct DiagnosticReport {
    PsfrTrace psfr_trace;
    double final_psfr = 1.0;
    bool converged = false;
    double threshold = kPsfrThreshold;
    std::optional<std::size_t> converged_at;
    std::vector<double> autocorrelation;
};

/// PSFR of exponentiated log Lambda_BKE traces plus the autocorrelation of the
/// first chain's log trace.
DiagnosticReport diagnose_chains(const ChainEnsemble& log_traces, std::size_t stride, std::size_t max_lag,
                                 double threshold = kPsfrThreshold);

/// {psfr_trace, psfr_iterations, final_psfr, converged, threshold, converged_at, autocorrelation}
nlohmann::json to_json(const DiagnosticReport& report);

}  // namespace iomc
