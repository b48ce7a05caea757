#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "harness/config.hpp"
#include "iomc/generator.hpp"
#include "iomc/observers.hpp"
#include "iomc/operators.hpp"

namespace iomc::harness {

/// Output-directory layout.
struct RunPaths {
    std::filesystem::path root;

    std::filesystem::path manifest() const { return root / "manifest.json"; }
    std::filesystem::path measurement(std::size_t id) const;
    std::filesystem::path truth(std::size_t id) const;
    std::filesystem::path surrogate() const { return root / "models" / "surrogate.gsom"; }
    std::filesystem::path surrogate_report() const { return root / "models" / "surrogate.json"; }
    std::filesystem::path ho_template() const { return root / "ho" / "template.json"; }
    std::filesystem::path mask() const { return root / "models" / "mask.pbm"; }
    /// chain 0 is the scoring chain; chains >= 1 only exist for diagnostic cases.
    std::filesystem::path chain(ObserverKind o, std::size_t id, std::size_t chain = 0) const;
    std::filesystem::path chain_summary(ObserverKind o, std::size_t id) const;
    std::filesystem::path diagnostics(ObserverKind o, std::size_t id) const;
    std::filesystem::path eval_dir() const { return root / "eval"; }
    std::filesystem::path spectrum_dir() const { return root / "spectrum"; }
};

std::string case_name(std::size_t id);

/// Seeds: master -> case -> named stream. Recorded in manifests.
std::uint64_t case_seed(const ExperimentConfig& cfg, std::size_t id);
std::uint64_t chain_seed(const ExperimentConfig& cfg, std::size_t id, ObserverKind observer, std::size_t chain);

/// Everything that is fixed for a run: operator, signal data, task.
class Experiment {
public:
    explicit Experiment(ExperimentConfig cfg);

    const ExperimentConfig& config() const { return cfg_; }
    const RunPaths& paths() const { return paths_; }
    const DetectionTask& task() const { return task_; }
    /// Discrete operator applied to object images; empty for analytic PRF imaging of lumpy objects.
    const std::optional<ImagingOperator>& imaging() const { return imaging_; }
    GridSize measurement_dims() const { return task_.signal.dims; }

    /// H0 for ids < n0, H1 otherwise.
    bool signal_present(std::size_t id) const { return id >= cfg_.evaluation.n0; }

    /// Noiseless background data drawn from the configured source with `rng`.
    /// `truth` receives the realization (lump centers or latent vector).
    std::vector<double> sample_background(Rng& rng, nlohmann::json* truth = nullptr) const;

    /// Object-domain image from the source (lumpy raster or G(z) before imaging).
    std::vector<double> sample_object(Rng& rng) const;

    /// Full measurement for case `id`, float32-quantized, with its ground truth.
    Measurement make_case(std::size_t id, nlohmann::json* truth = nullptr) const;

    /// Generator used by the MCMC-GAN observer (file or fitted surrogate). Loaded on demand.
    const GeneratorNet& gan_generator() const;
    SomBinding gan_binding() const;

private:
    const GeneratorNet& source_generator() const;

    ExperimentConfig cfg_;
    RunPaths paths_;
    DetectionTask task_;
    std::optional<ImagingOperator> imaging_;
    mutable std::optional<GeneratorNet> source_net_;
    mutable std::optional<GeneratorNet> gan_net_;
};

/// Fits G(z) = mean + V diag(sqrt(lambda)) z (top-k eigenpairs of the sample
/// covariance of `samples`). Returns the net and the captured variance fraction.
std::pair<GeneratorNet, double> fit_linear_surrogate(std::span<const std::vector<double>> samples,
                                                     std::size_t latent_dim, GridSize dims);

/// Builds models/surrogate.gsom when it is absent or stale. Deterministic.
void ensure_surrogate(const Experiment& exp, bool force);

/// Hotelling template from sampled backgrounds, cached in ho/template.json.
Eigen::VectorXd ensure_ho_template(const Experiment& exp, bool force);

}  // namespace iomc::harness
