#include "iomc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "iomc/types.hpp"

namespace iomc {

void ChainEnsemble::validate() const {
    if (chains.size() < 2) throw std::invalid_argument("chain ensemble: PSFR needs at least two chains");
    for (const auto& c : chains)
        if (c.size() != chains.front().size()) throw DimensionError("chain ensemble: chains have unequal lengths");
}

namespace {

struct ChainMoments {
    double mean = 0.0;
    double m2 = 0.0;  // sum of squared deviations
    std::size_t n = 0;

    void push(double x) {
        ++n;
        const double d = x - mean;
        mean += d / double(n);
        m2 += d * (x - mean);
    }
};

double psfr_from_moments(const std::vector<ChainMoments>& moments) {
    const std::size_t M = moments.size();
    const std::size_t N = moments.front().n;
    if (N < 2) throw std::invalid_argument("psfr: chains need at least two samples");
    double W = 0.0, grand = 0.0;
    for (const auto& m : moments) {
        W += m.m2 / double(N - 1);
        grand += m.mean;
    }
    W /= double(M);
    grand /= double(M);
    double B = 0.0;
    for (const auto& m : moments) B += (m.mean - grand) * (m.mean - grand);
    B *= double(N) / double(M - 1);

    if (W == 0.0) return B == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    const double n = double(N);
    return std::sqrt((n - 1.0) / n + B / (n * W));
}

double global_max(const ChainEnsemble& e) {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& c : e.chains)
        for (double v : c) m = std::max(m, v);
    return m;
}

}  // namespace

double psfr(const ChainEnsemble& ensemble) {
    ensemble.validate();
    std::vector<ChainMoments> moments(ensemble.chain_count());
    for (std::size_t m = 0; m < ensemble.chain_count(); ++m)
        for (double v : ensemble.chains[m]) moments[m].push(v);
    return psfr_from_moments(moments);
}

double psfr_of_exp(const ChainEnsemble& log_traces) {
    log_traces.validate();
    const double shift = global_max(log_traces);
    ChainEnsemble e;
    e.chains.reserve(log_traces.chain_count());
    for (const auto& c : log_traces.chains) {
        std::vector<double> x(c.size());
        std::transform(c.begin(), c.end(), x.begin(), [&](double v) { return std::exp(v - shift); });
        e.chains.push_back(std::move(x));
    }
    return psfr(e);
}

PsfrTrace running_psfr(const ChainEnsemble& ensemble, std::size_t stride, bool exponentiate) {
    ensemble.validate();
    if (stride == 0) throw std::invalid_argument("running_psfr: stride must be >= 1");
    const double shift = exponentiate ? global_max(ensemble) : 0.0;
    const std::size_t N = ensemble.length();
    std::vector<ChainMoments> moments(ensemble.chain_count());
    PsfrTrace out;
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t m = 0; m < moments.size(); ++m) {
            const double v = ensemble.chains[m][n];
            moments[m].push(exponentiate ? std::exp(v - shift) : v);
        }
        const std::size_t len = n + 1;
        if (len >= 2 && (len % stride == 0 || len == N)) {
            out.iterations.push_back(len);
            out.values.push_back(psfr_from_moments(moments));
        }
    }
    return out;
}

std::optional<std::size_t> convergence_iteration(const PsfrTrace& trace, double threshold) {
    std::optional<std::size_t> at;
    for (std::size_t i = 0; i < trace.values.size(); ++i) {
        if (trace.values[i] < threshold) {
            if (!at) at = trace.iterations[i];
        } else {
            at.reset();
        }
    }
    return at;
}

std::vector<double> autocorrelation(std::span<const double> trace, std::size_t max_lag) {
    const std::size_t N = trace.size();
    if (max_lag >= N) throw std::invalid_argument("autocorrelation: max_lag must be smaller than the trace length");
    double mean = 0.0;
    for (double v : trace) mean += v;
    mean /= double(N);
    std::vector<double> centered(N);
    for (std::size_t i = 0; i < N; ++i) centered[i] = trace[i] - mean;
    double c0 = 0.0;
    for (double v : centered) c0 += v * v;

    std::vector<double> out(max_lag + 1, 1.0);
    if (c0 == 0.0) return out;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        double ck = 0.0;
        for (std::size_t t = 0; t + k < N; ++t) ck += centered[t] * centered[t + k];
        out[k] = ck / c0;
    }
    return out;
}

DiagnosticReport diagnose_chains(const ChainEnsemble& log_traces, std::size_t stride, std::size_t max_lag,
                                 double threshold) {
    DiagnosticReport r;
    r.threshold = threshold;
    r.psfr_trace = running_psfr(log_traces, stride, true);
    r.final_psfr = r.psfr_trace.values.empty() ? psfr_of_exp(log_traces) : r.psfr_trace.values.back();
    r.converged = r.final_psfr < threshold;
    r.converged_at = convergence_iteration(r.psfr_trace, threshold);
    const auto& first = log_traces.chains.front();
    r.autocorrelation = autocorrelation(first, std::min(max_lag, first.size() - 1));
    return r;
}

nlohmann::json to_json(const DiagnosticReport& report) {
    nlohmann::json j{{"psfr_trace", report.psfr_trace.values},
                     {"psfr_iterations", report.psfr_trace.iterations},
                     {"final_psfr", report.final_psfr},
                     {"converged", report.converged},
                     {"threshold", report.threshold},
                     {"autocorrelation", report.autocorrelation}};
    j["converged_at"] = report.converged_at ? nlohmann::json(*report.converged_at) : nlohmann::json(nullptr);
    return j;
}

}  // namespace iomc
