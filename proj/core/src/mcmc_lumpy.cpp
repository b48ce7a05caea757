#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "iomc/mcmc.hpp"

namespace iomc {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Full recomputation period for the incrementally updated background image.
constexpr std::uint64_t kRefreshInterval = 1000;
}  // namespace

void LumpyMoveMix::validate() const {
    if (walk < 0.0 || birth < 0.0 || death < 0.0 || !(walk + birth + death > 0.0))
        throw std::invalid_argument("lumpy move mix: weights must be non-negative with a positive sum");
    if ((birth > 0.0) != (death > 0.0))
        throw std::invalid_argument("lumpy move mix: birth and death must be enabled together");
}

double lumpy_move_probability(const LumpyMoveMix& mix, LumpyMove move, std::size_t count) {
    const double walk = count > 0 ? mix.walk : 0.0;
    const double death = count > 0 ? mix.death : 0.0;
    const double birth = mix.birth;
    const double total = walk + birth + death;
    if (total <= 0.0) return move == LumpyMove::none ? 1.0 : 0.0;
    switch (move) {
        case LumpyMove::walk: return walk / total;
        case LumpyMove::birth: return birth / total;
        case LumpyMove::death: return death / total;
        case LumpyMove::none: return 0.0;
    }
    return 0.0;
}

LumpyProposal lumpy_walk(const LumpyRealization& state, const LumpyModelParams& params, std::size_t index,
                         Point2 delta) {
    if (index >= state.centers.size()) throw std::out_of_range("lumpy_walk: lump index out of range");
    LumpyProposal p;
    p.state = state;
    p.move = LumpyMove::walk;
    p.index = index;
    p.old_center = state.centers[index];
    p.new_center = {p.old_center.x + delta.x, p.old_center.y + delta.y};
    p.state.centers[index] = p.new_center;
    // Symmetric kernel: only the support of the uniform prior matters.
    p.log_correction = params.contains(p.new_center) ? 0.0 : kNegInf;
    return p;
}

LumpyProposal lumpy_birth(const LumpyRealization& state, const LumpyModelParams& params, const LumpyMoveMix& mix,
                          std::size_t index, Point2 center) {
    const std::size_t n = state.centers.size();
    if (index > n) throw std::out_of_range("lumpy_birth: insertion index out of range");
    LumpyProposal p;
    p.state = state;
    p.move = LumpyMove::birth;
    p.index = index;
    p.new_center = center;
    p.state.centers.insert(p.state.centers.begin() + static_cast<std::ptrdiff_t>(index), center);
    if (!params.contains(center)) {
        p.log_correction = kNegInf;
        return p;
    }
    // prior ratio lambda / ((n+1) A); forward q = P_b(n) / ((n+1) A); reverse q = P_d(n+1) / (n+1)
    p.log_correction = std::log(params.mean_lumps / double(n + 1)) +
                       std::log(lumpy_move_probability(mix, LumpyMove::death, n + 1)) -
                       std::log(lumpy_move_probability(mix, LumpyMove::birth, n));
    return p;
}

LumpyProposal lumpy_death(const LumpyRealization& state, const LumpyModelParams& params, const LumpyMoveMix& mix,
                          std::size_t index) {
    const std::size_t n = state.centers.size();
    if (index >= n) throw std::out_of_range("lumpy_death: lump index out of range");
    LumpyProposal p;
    p.state = state;
    p.move = LumpyMove::death;
    p.index = index;
    p.old_center = state.centers[index];
    p.state.centers.erase(p.state.centers.begin() + static_cast<std::ptrdiff_t>(index));
    p.log_correction = std::log(double(n) / params.mean_lumps) +
                       std::log(lumpy_move_probability(mix, LumpyMove::birth, n - 1)) -
                       std::log(lumpy_move_probability(mix, LumpyMove::death, n));
    return p;
}

LumpyProposal lumpy_propose(const LumpyRealization& state, const LumpyModelParams& params, double step_sigma,
                            const LumpyMoveMix& mix, Rng& rng) {
    mix.validate();
    const std::size_t n = state.centers.size();
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng);
    const double p_walk = lumpy_move_probability(mix, LumpyMove::walk, n);
    const double p_birth = lumpy_move_probability(mix, LumpyMove::birth, n);
    const double p_death = lumpy_move_probability(mix, LumpyMove::death, n);

    if (p_walk + p_birth + p_death <= 0.0) {
        LumpyProposal p;
        p.state = state;
        return p;
    }
    if (u < p_walk) {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::normal_distribution<double> step(0.0, step_sigma);
        const std::size_t i = pick(rng);
        const double dx = step(rng);
        const double dy = step(rng);
        return lumpy_walk(state, params, i, {dx, dy});
    }
    if (u < p_walk + p_birth) {
        std::uniform_int_distribution<std::size_t> slot(0, n);
        std::uniform_real_distribution<double> ux(0.0, params.fov.width);
        std::uniform_real_distribution<double> uy(0.0, params.fov.height);
        const std::size_t i = slot(rng);
        const double x = ux(rng);
        const double y = uy(rng);
        return lumpy_birth(state, params, mix, i, {x, y});
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    return lumpy_death(state, params, mix, pick(rng));
}

ChainRecord run_lumpy_chain(const DetectionTask& task, const Measurement& g, const LumpyModelParams& params,
                            const ChainConfig& cfg, const LumpyChainOptions& options) {
    cfg.validate();
    task.validate();
    params.validate();
    options.mix.validate();
    if (!task.prf_system) throw std::invalid_argument("run_lumpy_chain: task has no PRF imaging system");
    if (!(options.step_sigma > 0.0)) throw std::invalid_argument("run_lumpy_chain: step_sigma must be > 0");
    if (params.fixed_count && options.mix.trans_dimensional())
        throw std::invalid_argument("run_lumpy_chain: birth/death moves need a Poisson lump count (fixed_count unset)");
    if (!params.fixed_count && !options.mix.trans_dimensional())
        throw std::invalid_argument("run_lumpy_chain: a Poisson lump count needs birth/death moves to be ergodic");
    const GaussianPrfSystem& sys = *task.prf_system;
    require_same_size(g.size(), sys.grid.count(), "run_lumpy_chain measurement vs PRF grid");

    Rng rng(cfg.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    LumpyRealization state;
    if (cfg.init == ChainInit::provided) {
        if (cfg.initial_state.size() % 2 != 0)
            throw DimensionError("run_lumpy_chain: initial state must hold (x, y) pairs");
        state.amplitude = params.amplitude;
        state.width = params.width;
        state.fov = params.fov;
        for (std::size_t i = 0; i < cfg.initial_state.size(); i += 2)
            state.centers.push_back({cfg.initial_state[i], cfg.initial_state[i + 1]});
        if (params.fixed_count && state.centers.size() != *params.fixed_count)
            throw DimensionError("run_lumpy_chain: initial state does not match fixed_count");
    } else {
        state = sample_lumpy_realization(params, rng);
    }

    const std::span<const double> gd = g.data;
    const std::span<const double> sd = task.signal.data;
    const double sigma = task.noise.sigma;

    std::vector<double> b_cur = image_lumpy_analytic(state, sys).data;
    std::vector<double> b_new(b_cur.size());
    double ll_cur = gaussian_log_likelihood(gd, b_cur, sigma);
    double lambda_cur = log_bke_likelihood_ratio(gd, b_cur, sd, sigma);

    ChainRecord rec;
    rec.config = cfg;
    rec.burn_in = cfg.burn_in;
    rec.log_lambda.reserve(cfg.n_iterations);
    rec.accepted.reserve(cfg.n_iterations);

    double step = options.step_sigma;
    const double max_step = std::max(params.fov.width, params.fov.height);
    std::uint64_t window_accepts = 0;
    for (std::uint64_t j = 0; j < cfg.n_iterations; ++j) {
        LumpyProposal prop = lumpy_propose(state, params, step, options.mix, rng);
        const double u = uniform(rng);
        bool accept = false;
        if (prop.move == LumpyMove::none) {
            accept = true;
        } else if (prop.log_correction != kNegInf) {
            b_new = b_cur;
            switch (prop.move) {
                case LumpyMove::walk:
                    accumulate_lump_image(prop.old_center, params.amplitude, params.width, sys, -1.0, b_new);
                    accumulate_lump_image(prop.new_center, params.amplitude, params.width, sys, 1.0, b_new);
                    break;
                case LumpyMove::birth:
                    accumulate_lump_image(prop.new_center, params.amplitude, params.width, sys, 1.0, b_new);
                    break;
                case LumpyMove::death:
                    accumulate_lump_image(prop.old_center, params.amplitude, params.width, sys, -1.0, b_new);
                    break;
                case LumpyMove::none:
                    break;
            }
            const double ll_new = gaussian_log_likelihood(gd, b_new, sigma);
            const double log_accept = std::min(0.0, ll_new - ll_cur + prop.log_correction);
            if (std::log(u) < log_accept) {
                accept = true;
                state = std::move(prop.state);
                b_cur.swap(b_new);
                ll_cur = ll_new;
                lambda_cur = log_bke_likelihood_ratio(gd, b_cur, sd, sigma);
            }
        }
        if (accept) ++window_accepts;
        if ((j + 1) % kRefreshInterval == 0) {
            b_cur = image_lumpy_analytic(state, sys).data;
            ll_cur = gaussian_log_likelihood(gd, b_cur, sigma);
            lambda_cur = log_bke_likelihood_ratio(gd, b_cur, sd, sigma);
        }
        rec.log_lambda.push_back(lambda_cur);
        rec.accepted.push_back(accept ? 1 : 0);
        if (cfg.thinning > 0 && (j + 1) % cfg.thinning == 0) {
            std::vector<double> flat;
            for (const Point2& c : state.centers) {
                flat.push_back(c.x);
                flat.push_back(c.y);
            }
            rec.state_trace.push_back(std::move(flat));
        }
        if (cfg.auto_tune && j < cfg.burn_in && (j + 1) % cfg.tune_interval == 0) {
            const double rate = double(window_accepts) / double(cfg.tune_interval);
            if (rate < cfg.target_low)
                step *= 0.7;
            else if (rate > cfg.target_high)
                step = std::min(max_step, step * 1.3);
            window_accepts = 0;
        }
    }
    rec.step = step;
    for (const Point2& c : state.centers) {
        rec.final_state.push_back(c.x);
        rec.final_state.push_back(c.y);
    }
    return rec;
}

}  // namespace iomc
