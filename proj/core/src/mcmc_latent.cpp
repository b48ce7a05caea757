#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iomc/mcmc.hpp"

namespace iomc {

void ChainConfig::validate() const {
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("chain config: beta must lie in (0, 1]");
    if (n_iterations == 0) throw std::invalid_argument("chain config: n_iterations must be >= 1");
    if (burn_in >= n_iterations) throw std::invalid_argument("chain config: burn_in must be < n_iterations");
    if (init == ChainInit::provided && initial_state.empty())
        throw std::invalid_argument("chain config: provided init requires an initial state");
    if (auto_tune && !(target_low > 0.0 && target_low < target_high && target_high <= 1.0 && tune_interval > 0))
        throw std::invalid_argument("chain config: invalid auto-tune targets");
}

double ChainRecord::acceptance_rate() const {
    if (accepted.empty()) return 0.0;
    return double(std::count(accepted.begin(), accepted.end(), std::uint8_t{1})) / double(accepted.size());
}

double ChainRecord::post_burn_in_acceptance_rate() const {
    if (burn_in >= accepted.size()) return 0.0;
    const auto first = accepted.begin() + static_cast<std::ptrdiff_t>(burn_in);
    return double(std::count(first, accepted.end(), std::uint8_t{1})) / double(accepted.size() - burn_in);
}

LatentVector pcn_combine(const LatentVector& z, const LatentVector& xi, double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("pCN: beta must lie in (0, 1]");
    require_same_size(z.size(), xi.size(), "pCN");
    const double keep = std::sqrt(1.0 - beta * beta);
    LatentVector out{std::vector<double>(z.size())};
    for (std::size_t i = 0; i < z.size(); ++i) out.values[i] = keep * z.values[i] + beta * xi.values[i];
    return out;
}

LatentVector pcn_propose(const LatentVector& z, double beta, Rng& rng) {
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("pCN: beta must lie in (0, 1]");
    return pcn_combine(z, LatentVector::prior_draw(z.size(), rng), beta);
}

double gaussian_log_likelihood(std::span<const double> g, std::span<const double> b, double sigma) {
    require_same_size(g.size(), b.size(), "gaussian_log_likelihood");
    double ss = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g[i] - b[i];
        ss += r * r;
    }
    return -ss / (2.0 * sigma * sigma);
}

double gaussian_log_acceptance(std::span<const double> g, std::span<const double> b_new,
                               std::span<const double> b_cur, double sigma) {
    require_same_size(b_new.size(), b_cur.size(), "gaussian_log_acceptance");
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_log_acceptance: sigma must be > 0");
    return std::min(0.0, gaussian_log_likelihood(g, b_new, sigma) - gaussian_log_likelihood(g, b_cur, sigma));
}

double gaussian_log_acceptance(const Measurement& g, const Measurement& b_new, const Measurement& b_cur,
                               double sigma) {
    return gaussian_log_acceptance(g.data, b_new.data, b_cur.data, sigma);
}

namespace {

// Multiplicative step adaptation during burn-in.
double adapt_step(double step, double rate, const ChainConfig& cfg, double max_step) {
    if (rate < cfg.target_low) return step * 0.7;
    if (rate > cfg.target_high) return std::min(max_step, step * 1.3);
    return step;
}

}  // namespace

ChainRecord run_latent_chain(const DetectionTask& task, std::size_t latent_dim, const LatentBackground& background,
                             const Measurement& g, const ChainConfig& cfg) {
    cfg.validate();
    task.validate();
    if (task.noise.kind != NoiseKind::iid_gaussian && task.noise.kind != NoiseKind::iid_complex_gaussian)
        throw std::invalid_argument("run_latent_chain: requires i.i.d. Gaussian noise");
    require_same_size(g.size(), task.signal.size(), "run_latent_chain measurement vs signal");
    if (latent_dim == 0) throw DimensionError("run_latent_chain: latent dimension must be >= 1");

    Rng rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    LatentVector z;
    if (cfg.init == ChainInit::provided) {
        require_same_size(cfg.initial_state.size(), latent_dim, "run_latent_chain initial state");
        z.values = cfg.initial_state;
    } else {
        z.values.resize(latent_dim);
        for (double& v : z.values) v = normal(rng);
    }

    const std::span<const double> gd = g.data;
    const std::span<const double> sd = task.signal.data;
    const double sigma = task.noise.sigma;

    std::vector<double> b_cur, b_new;
    background(z.values, b_cur);
    require_same_size(b_cur.size(), g.size(), "run_latent_chain background vs measurement");
    double ll_cur = gaussian_log_likelihood(gd, b_cur, sigma);
    double lambda_cur = log_bke_likelihood_ratio(gd, b_cur, sd, sigma);

    ChainRecord rec;
    rec.config = cfg;
    rec.burn_in = cfg.burn_in;
    rec.log_lambda.reserve(cfg.n_iterations);
    rec.accepted.reserve(cfg.n_iterations);

    double beta = cfg.beta;
    std::uint64_t window_accepts = 0;
    LatentVector proposal{std::vector<double>(latent_dim)};
    for (std::uint64_t j = 0; j < cfg.n_iterations; ++j) {
        const double keep = std::sqrt(1.0 - beta * beta);
        for (std::size_t i = 0; i < latent_dim; ++i) proposal.values[i] = keep * z.values[i] + beta * normal(rng);
        background(proposal.values, b_new);
        require_same_size(b_new.size(), g.size(), "run_latent_chain background vs measurement");
        const double ll_new = gaussian_log_likelihood(gd, b_new, sigma);
        const double log_accept = std::min(0.0, ll_new - ll_cur);
        const double u = uniform(rng);
        const bool accept = std::log(u) < log_accept;
        if (accept) {
            z.values.swap(proposal.values);
            b_cur.swap(b_new);
            ll_cur = ll_new;
            lambda_cur = log_bke_likelihood_ratio(gd, b_cur, sd, sigma);
            ++window_accepts;
        }
        rec.log_lambda.push_back(lambda_cur);
        rec.accepted.push_back(accept ? 1 : 0);
        if (cfg.thinning > 0 && (j + 1) % cfg.thinning == 0) rec.state_trace.push_back(z.values);

        if (cfg.auto_tune && j < cfg.burn_in && (j + 1) % cfg.tune_interval == 0) {
            beta = adapt_step(beta, double(window_accepts) / double(cfg.tune_interval), cfg, 1.0);
            window_accepts = 0;
        }
    }
    rec.step = beta;
    rec.final_state = std::move(z.values);
    return rec;
}

ChainRecord run_latent_chain(const DetectionTask& task, const GeneratorNet& net, const SomBinding& binding,
                             const Measurement& g, const ChainConfig& cfg) {
    binding.validate();
    LatentVector z;
    auto background = [&](std::span<const double> latent, std::vector<double>& b) {
        z.values.assign(latent.begin(), latent.end());
        b = generated_background(net, binding, z).data;
    };
    return run_latent_chain(task, net.latent_dim(), background, g, cfg);
}

}  // namespace iomc
