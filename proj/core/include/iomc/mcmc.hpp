#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "iomc/generator.hpp"
#include "iomc/imaging.hpp"
#include "iomc/object_model.hpp"
#include "iomc/observers.hpp"
#include "iomc/rng.hpp"

namespace iomc {

enum class ChainInit : std::uint8_t { prior_draw = 0, provided = 1 };

struct ChainConfig {
    std::uint64_t n_iterations = 200'000;
    std::uint64_t burn_in = 10'000;
    /// pCN step size in (0, 1]; ignored by the lumpy chain (see LumpyChainOptions).
    double beta = 0.1;
    std::uint64_t seed = 0;
    ChainInit init = ChainInit::prior_draw;
    std::vector<double> initial_state;
    /// Keep every `thinning`-th state in ChainRecord::state_trace; 0 keeps none.
    std::uint64_t thinning = 0;
    /// Adapt the step during burn-in toward [target_low, target_high] acceptance,
    /// then freeze it so the recorded post-burn-in chain is a valid MH chain.
    bool auto_tune = false;
    double target_low = 0.2;
    double target_high = 0.4;
    std::uint64_t tune_interval = 100;

    void validate() const;

    friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

struct ChainRecord {
    /// log Lambda_BKE of the chain state after each iteration.
    std::vector<double> log_lambda;
    std::vector<std::uint8_t> accepted;
    std::uint64_t burn_in = 0;
    std::vector<double> final_state;
    std::vector<std::vector<double>> state_trace;
    ChainConfig config;
    /// Step size in effect after burn-in (beta or lump step sigma).
    double step = 0.0;

    std::size_t size() const { return log_lambda.size(); }
    double acceptance_rate() const;
    double post_burn_in_acceptance_rate() const;

    friend bool operator==(const ChainRecord&, const ChainRecord&) = default;
};


// ---------------------------------------------------------------------------
// Latent-space chain (pCN)

/// z~ = sqrt(1 - beta^2) z + beta xi.
LatentVector pcn_combine(const LatentVector& z, const LatentVector& xi, double beta);

/// pCN proposal with xi ~ N(0, I). Requires 0 < beta <= 1.
LatentVector pcn_propose(const LatentVector& z, double beta, Rng& rng);

/// -|g - b|^2 / (2 sigma^2), the i.i.d. Gaussian log-likelihood up to a constant.
double gaussian_log_likelihood(std::span<const double> g, std::span<const double> b, double sigma);

/// min(0, (|g - b_cur|^2 - |g - b_new|^2) / (2 sigma^2)).
double gaussian_log_acceptance(std::span<const double> g, std::span<const double> b_new,
                               std::span<const double> b_cur, double sigma);
double gaussian_log_acceptance(const Measurement& g, const Measurement& b_new, const Measurement& b_cur,
                               double sigma);

/// Background data b(z) for a latent vector; must write exactly g.size() values.
using LatentBackground = std::function<void(std::span<const double> z, std::vector<double>& b)>;

/// Metropolis-Hastings over z with the pCN proposal; the prior and proposal
/// terms cancel so acceptance uses the H0 data likelihood only. Records
/// log Lambda_BKE(g | b(z^j)) at every iteration.
ChainRecord run_latent_chain(const DetectionTask& task, std::size_t latent_dim, const LatentBackground& background,
                             const Measurement& g, const ChainConfig& cfg);

ChainRecord run_latent_chain(const DetectionTask& task, const GeneratorNet& net, const SomBinding& binding,
                             const Measurement& g, const ChainConfig& cfg);

// ---------------------------------------------------------------------------
// Lumpy-parameter chain

/// Relative weights of the three move types; renormalized over the moves that
/// are possible in the current state.
struct LumpyMoveMix {
    double walk = 1.0;
    double birth = 0.0;
    double death = 0.0;

    void validate() const;
    bool trans_dimensional() const { return birth > 0.0 || death > 0.0; }
};

enum class LumpyMove : std::uint8_t { none, walk, birth, death };

struct LumpyProposal {
    LumpyRealization state;
    /// log [prior(new) q(old | new)] - log [prior(old) q(new | old)]; -inf when the
    /// proposed state has zero prior mass.
    double log_correction = 0.0;
    LumpyMove move = LumpyMove::none;
    /// Lump index that was moved, inserted or removed.
    std::size_t index = 0;
    /// Center before (walk, death) or after (birth) the move.
    Point2 old_center{};
    Point2 new_center{};
};

/// Probability of choosing `move` in a state with `count` lumps.
double lumpy_move_probability(const LumpyMoveMix& mix, LumpyMove move, std::size_t count);

LumpyProposal lumpy_propose(const LumpyRealization& state, const LumpyModelParams& params, double step_sigma,
                            const LumpyMoveMix& mix, Rng& rng);

// Deterministic moves, used by lumpy_propose and by tests.
LumpyProposal lumpy_walk(const LumpyRealization& state, const LumpyModelParams& params, std::size_t index,
                         Point2 delta);
LumpyProposal lumpy_birth(const LumpyRealization& state, const LumpyModelParams& params, const LumpyMoveMix& mix,
                          std::size_t index, Point2 center);
LumpyProposal lumpy_death(const LumpyRealization& state, const LumpyModelParams& params, const LumpyMoveMix& mix,
                          std::size_t index);

struct LumpyChainOptions {
    double step_sigma = 2.0;
    LumpyMoveMix mix{};
};

/// Metropolis-Hastings over lump centers (and count, with birth/death) with a
/// Gaussian data likelihood and a uniform-center x Poisson-count prior.
/// Requires task.prf_system. Birth/death moves must be enabled exactly when
/// params.fixed_count is unset. final_state holds the centers as [x0, y0, x1, y1, ...].
ChainRecord run_lumpy_chain(const DetectionTask& task, const Measurement& g, const LumpyModelParams& params,
                            const ChainConfig& cfg, const LumpyChainOptions& options = {});

// ---------------------------------------------------------------------------
// Persistence

// Binary chain file: "IOCH", u32 version, config block, u64 n, f32[n] log Lambda,
// bit-packed acceptance (LSB first), final state f64[], thinned states f32[].
void write_chain(const std::filesystem::path& path, const ChainRecord& record);
ChainRecord read_chain(const std::filesystem::path& path);

/// {n_iterations, burn_in, seed, step, acceptance_rate, post_burn_in_acceptance_rate, log_lambda_hat}
nlohmann::json chain_summary(const ChainRecord& record);

}  // namespace iomc
