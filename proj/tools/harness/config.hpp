#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "iomc/evaluation.hpp"
#include "iomc/fourier.hpp"
#include "iomc/generator.hpp"
#include "iomc/imaging.hpp"
#include "iomc/mcmc.hpp"
#include "iomc/object_model.hpp"

namespace iomc::harness {

/// Bad or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Required inputs missing on disk (CLI exit code 3).
class IncompleteInputs : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class BackgroundSource { lumpy, generator };
enum class ImagingKind { prf, identity, fourier };
enum class ObserverKind { mcmc_gan, mcmc_lb, ho };

std::string to_string(ObserverKind o);
std::string to_string(ImagingKind k);
std::string to_string(BackgroundSource s);

struct TaskBlock {
    BackgroundSource background = BackgroundSource::lumpy;
    LumpyModelParams lumpy{};
    ImagingKind imaging = ImagingKind::prf;
    /// height/width of the PRF; its grid always equals the object grid.
    GaussianPrfSystem prf{};
    double fourier_acceleration = 16.0;
    DensityProfile fourier_density{};
    std::optional<std::filesystem::path> fourier_mask;
    GaussianSignal signal{};
    NoiseModel noise{};
};

struct GeneratorBlock {
    /// GSOM file; when absent a linear surrogate is fit to the background source.
    std::optional<std::filesystem::path> path;
    SomDomain domain = SomDomain::image;
    std::size_t surrogate_latent_dim = 64;
    std::size_t surrogate_samples = 10000;
};

struct ChainBlock {
    ChainConfig gan{};
    ChainConfig lumpy{};
    LumpyChainOptions lumpy_options{};
    std::size_t diagnostic_chains = 5;
    std::vector<std::size_t> diagnostic_cases{0};
    std::size_t psfr_stride = 500;
    std::size_t autocorrelation_lags = 200;
};

struct EvaluationBlock {
    std::size_t n0 = 200;
    std::size_t n1 = 200;
    std::vector<ObserverKind> observers{ObserverKind::mcmc_gan, ObserverKind::mcmc_lb, ObserverKind::ho};
    std::size_t ho_samples = 10000;
    AucSeOptions stderr_options{};
    std::size_t spectrum_images = 200;
    /// 0 picks min(width, height) / 2.
    std::size_t spectrum_bins = 0;
    double spectrum_band = 0.10;
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "runs/experiment";
    /// Worker threads over cases; 0 uses the hardware concurrency.
    std::size_t threads = 0;
    TaskBlock task{};
    GeneratorBlock generator{};
    ChainBlock chain{};
    EvaluationBlock evaluation{};

    std::size_t case_count() const { return evaluation.n0 + evaluation.n1; }
    bool has_observer(ObserverKind o) const;
    /// Grid the object (and, for PRF or identity imaging, the measurement) lives on.
    GridSize object_grid() const { return task.lumpy.fov; }

    /// Throws ConfigError.
    void validate() const;
};

/// YAML (or JSON, which YAML accepts). Relative paths resolve against `base_dir`.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of every field that affects the artifacts.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Hex digests of the blocks each artifact depends on.
std::string data_fingerprint(const ExperimentConfig& cfg);
std::string chain_fingerprint(const ExperimentConfig& cfg, ObserverKind observer);
std::string model_fingerprint(const ExperimentConfig& cfg);

}  // namespace iomc::harness
