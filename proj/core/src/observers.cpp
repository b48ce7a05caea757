#include "iomc/observers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "iomc/file_util.hpp"
#include "iomc/mcmc.hpp"

namespace iomc {

void DetectionTask::validate() const {
    signal.validate();
    noise.validate();
    if (prf_system) {
        prf_system->validate();
        require_same_size(signal.size(), prf_system->grid.count(), "detection task signal vs PRF grid");
    }
    if (lumpy) lumpy->validate();
}

void ObserverScoreSet::validate() const {
    if (h0.empty() || h1.empty()) throw std::invalid_argument("score set: both classes must be non-empty");
}

double log_bke_likelihood_ratio(std::span<const double> g, std::span<const double> b, std::span<const double> s,
                                double sigma) {
    require_same_size(g.size(), b.size(), "log_bke_likelihood_ratio g/b");
    require_same_size(g.size(), s.size(), "log_bke_likelihood_ratio g/s");
    if (!(sigma > 0.0)) throw std::invalid_argument("log_bke_likelihood_ratio: sigma must be > 0");
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) acc += (g[i] - b[i] - 0.5 * s[i]) * s[i];
    return acc / (sigma * sigma);
}

double log_mean_exp(std::span<const double> log_values) {
    if (log_values.empty()) throw std::invalid_argument("log_mean_exp: empty input");
    const double m = *std::max_element(log_values.begin(), log_values.end());
    if (!std::isfinite(m)) return m;
    double sum = 0.0;
    for (double v : log_values) sum += std::exp(v - m);
    return m + std::log(sum) - std::log(double(log_values.size()));
}

double estimate_log_likelihood_ratio(const ChainRecord& chain) {
    if (chain.burn_in >= chain.log_lambda.size())
        throw std::invalid_argument("estimate_log_likelihood_ratio: chain has no post-burn-in samples");
    return log_mean_exp(std::span(chain.log_lambda).subspan(chain.burn_in));
}

Eigen::MatrixXd sample_covariance(std::span<const std::vector<double>> samples) {
    if (samples.size() < 2) throw std::invalid_argument("sample_covariance: need at least two samples");
    const auto n = static_cast<Eigen::Index>(samples.front().size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (const auto& s : samples) {
        require_same_size(s.size(), std::size_t(n), "sample_covariance");
        mean += Eigen::Map<const Eigen::VectorXd>(s.data(), n);
    }
    mean /= double(samples.size());
    Eigen::MatrixXd centered(n, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t j = 0; j < samples.size(); ++j)
        centered.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(samples[j].data(), n) - mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
    cov = cov.selfadjointView<Eigen::Lower>();
    return cov / double(samples.size() - 1);
}

Eigen::MatrixXd sample_covariance(std::span<const Measurement> samples) {
    std::vector<std::vector<double>> data;
    data.reserve(samples.size());
    for (const auto& m : samples) data.push_back(m.data);
    return sample_covariance(std::span<const std::vector<double>>(data));
}

Eigen::VectorXd ho_template(const Eigen::MatrixXd& K_b, double sigma, std::span<const double> s, double loading) {
    if (K_b.rows() != K_b.cols()) throw DimensionError("ho_template: covariance must be square");
    require_same_size(s.size(), std::size_t(K_b.rows()), "ho_template");
    if (!(sigma > 0.0)) throw std::invalid_argument("ho_template: sigma must be > 0");
    const double scale = std::max(1.0, K_b.cwiseAbs().maxCoeff());
    if ((K_b - K_b.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("ho_template: covariance is not symmetric");

    const auto M = K_b.rows();
    const double eps = M > 0 ? loading * K_b.trace() / double(M) : 0.0;
    Eigen::MatrixXd K_g = K_b;
    K_g.diagonal().array() += sigma * sigma + eps;
    Eigen::LLT<Eigen::MatrixXd> llt(K_g);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("ho_template: covariance is not positive semidefinite");
    return llt.solve(Eigen::Map<const Eigen::VectorXd>(s.data(), M));
}

double ho_test_statistic(std::span<const double> w, std::span<const double> g) {
    require_same_size(w.size(), g.size(), "ho_test_statistic");
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * g[i];
    return acc;
}

std::string scores_to_csv(const ObserverScoreSet& scores, std::span<const std::size_t> case_ids) {
    const std::size_t total = scores.h0.size() + scores.h1.size();
    if (!case_ids.empty()) require_same_size(case_ids.size(), total, "scores_to_csv case ids");
    std::ostringstream out;
    out << "case_id,hypothesis,score\n";
    char buf[64];
    std::size_t row = 0;
    auto emit = [&](const std::vector<double>& values, int hypothesis) {
        for (double v : values) {
            const std::size_t id = case_ids.empty() ? row : case_ids[row];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << id << ',' << hypothesis << ',' << buf << '\n';
            ++row;
        }
    };
    emit(scores.h0, 0);
    emit(scores.h1, 1);
    return out.str();
}

void write_scores_csv(const std::filesystem::path& path, const ObserverScoreSet& scores,
                      std::span<const std::size_t> case_ids) {
    write_file_atomic(path, scores_to_csv(scores, case_ids));
}

}  // namespace iomc
