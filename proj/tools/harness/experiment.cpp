#include "harness/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <mutex>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "harness/log.hpp"
#include "iomc/file_util.hpp"
#include "iomc/rng.hpp"

namespace iomc::harness {

std::string case_name(std::size_t id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "case_%05zu", id);
    return buf;
}

std::filesystem::path RunPaths::measurement(std::size_t id) const { return root / "data" / (case_name(id) + ".iomm"); }
std::filesystem::path RunPaths::truth(std::size_t id) const { return root / "data" / (case_name(id) + ".json"); }

std::filesystem::path RunPaths::chain(ObserverKind o, std::size_t id, std::size_t chain) const {
    const auto dir = root / "chains" / to_string(o);
    if (chain == 0) return dir / (case_name(id) + ".ioch");
    return dir / (case_name(id) + ".c" + std::to_string(chain) + ".ioch");
}

std::filesystem::path RunPaths::chain_summary(ObserverKind o, std::size_t id) const {
    return root / "chains" / to_string(o) / (case_name(id) + ".json");
}

std::filesystem::path RunPaths::diagnostics(ObserverKind o, std::size_t id) const {
    return root / "diagnostics" / to_string(o) / (case_name(id) + ".json");
}

std::uint64_t case_seed(const ExperimentConfig& cfg, std::size_t id) { return derive_seed(cfg.seed, "case", id); }

std::uint64_t chain_seed(const ExperimentConfig& cfg, std::size_t id, ObserverKind observer, std::size_t chain) {
    return derive_seed(case_seed(cfg, id), "chain/" + to_string(observer), chain);
}

namespace {

std::mutex g_model_mutex;

Measurement image_object(const std::optional<ImagingOperator>& op, std::span<const double> object) {
    return apply_operator(*op, object);
}

GeneratorNet load_checked(const std::filesystem::path& p) {
    try {
        return load_generator(p);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("generator: ") + e.what());
    }
}

// Covariance accumulated in batches so that large sample counts fit in memory.
// Samples are centered on the first sample to limit cancellation.
struct CovarianceAccumulator {
    explicit CovarianceAccumulator(std::size_t dim) : sum(Eigen::VectorXd::Zero(Eigen::Index(dim))) {
        scatter = Eigen::MatrixXd::Zero(Eigen::Index(dim), Eigen::Index(dim));
    }

    void push(const std::vector<double>& x) {
        Eigen::Map<const Eigen::VectorXd> v(x.data(), Eigen::Index(x.size()));
        if (n == 0) pivot = v;
        batch.push_back(v - pivot);
        ++n;
        if (batch.size() == kBatch) flush();
    }

    void flush() {
        if (batch.empty()) return;
        Eigen::MatrixXd B(sum.size(), Eigen::Index(batch.size()));
        for (std::size_t i = 0; i < batch.size(); ++i) B.col(Eigen::Index(i)) = batch[i];
        sum += B.rowwise().sum();
        scatter.selfadjointView<Eigen::Lower>().rankUpdate(B);
        batch.clear();
    }

    /// mean, unbiased covariance
    std::pair<Eigen::VectorXd, Eigen::MatrixXd> finish() {
        flush();
        const Eigen::VectorXd m = sum / double(n);
        Eigen::MatrixXd K = scatter.selfadjointView<Eigen::Lower>();
        K -= double(n) * m * m.transpose();
        K /= double(n - 1);
        return {m + pivot, K};
    }

    static constexpr std::size_t kBatch = 256;
    Eigen::VectorXd sum;
    Eigen::MatrixXd scatter;
    Eigen::VectorXd pivot;
    std::vector<Eigen::VectorXd> batch;
    std::size_t n = 0;
};

}  // namespace

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)), paths_{cfg_.output_dir} {
    cfg_.validate();
    const GridSize grid = cfg_.object_grid();
    GaussianPrfSystem sys = cfg_.task.prf;
    sys.grid = grid;

    const bool object_generator =
        cfg_.generator.path && cfg_.generator.domain == SomDomain::object;
    switch (cfg_.task.imaging) {
        case ImagingKind::prf:
            if (object_generator) imaging_ = discretize_prf(sys, grid);
            break;
        case ImagingKind::identity: imaging_ = IdentityOperator{grid}; break;
        case ImagingKind::fourier: {
            SamplingMask mask;
            if (cfg_.task.fourier_mask) {
                try {
                    mask = read_mask_pbm(*cfg_.task.fourier_mask);
                } catch (const std::exception& e) {
                    throw ConfigError(std::string("task.fourier.mask: ") + e.what());
                }
                if (!(mask.dims == grid)) throw ConfigError("task.fourier.mask: mask size does not match task.lumpy.fov");
            } else {
                Rng rng(derive_seed(cfg_.seed, "mask"));
                try {
                    mask = make_poisson_disc_mask(grid, cfg_.task.fourier_acceleration, cfg_.task.fourier_density, rng);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(std::string("task.fourier: ") + e.what());
                }
            }
            imaging_ = make_fourier_operator(std::move(mask), cfg_.task.fourier_acceleration);
            break;
        }
    }

    task_.name = cfg_.name;
    task_.noise = cfg_.task.noise;
    task_.prf_system = sys;
    task_.lumpy = cfg_.task.lumpy;
    if (cfg_.task.imaging == ImagingKind::prf) {
        task_.signal = image_signal_analytic(cfg_.task.signal, sys);
    } else {
        const auto s = rasterize([&](Point2 p) { return eval_signal_field(cfg_.task.signal, p); }, grid);
        task_.signal = image_object(imaging_, s);
    }

    if (cfg_.task.background == BackgroundSource::generator) {
        const auto& net = source_generator();
        const std::size_t want = cfg_.generator.domain == SomDomain::object ? grid.count() : task_.signal.size();
        if (net.output_size() != want)
            throw ConfigError("generator: output size " + std::to_string(net.output_size()) + " does not match " +
                              std::to_string(want));
    }
}

const GeneratorNet& Experiment::source_generator() const {
    std::lock_guard lock(g_model_mutex);
    if (!source_net_) source_net_ = load_checked(*cfg_.generator.path);
    return *source_net_;
}

const GeneratorNet& Experiment::gan_generator() const {
    if (cfg_.generator.path) return source_generator();
    std::lock_guard lock(g_model_mutex);
    if (!gan_net_) {
        if (!std::filesystem::exists(paths_.surrogate()))
            throw IncompleteInputs("surrogate generator missing: " + paths_.surrogate().string());
        gan_net_ = load_checked(paths_.surrogate());
    }
    return *gan_net_;
}

SomBinding Experiment::gan_binding() const {
    SomBinding b;
    b.mode = cfg_.generator.path ? cfg_.generator.domain : SomDomain::image;
    if (b.mode == SomDomain::object) b.imaging = imaging_;
    return b;
}

std::vector<double> Experiment::sample_object(Rng& rng) const {
    if (cfg_.task.background == BackgroundSource::lumpy) {
        const auto r = sample_lumpy_realization(cfg_.task.lumpy, rng);
        return rasterize([&](Point2 p) { return eval_object_field(r, p); }, cfg_.object_grid());
    }
    const auto& net = source_generator();
    return net.forward(LatentVector::prior_draw(net.latent_dim(), rng).values);
}

std::vector<double> Experiment::sample_background(Rng& rng, nlohmann::json* truth) const {
    if (cfg_.task.background == BackgroundSource::lumpy) {
        const auto r = sample_lumpy_realization(cfg_.task.lumpy, rng);
        if (truth) *truth = r;
        if (cfg_.task.imaging == ImagingKind::prf) return image_lumpy_analytic(r, *task_.prf_system).data;
        const auto f = rasterize([&](Point2 p) { return eval_object_field(r, p); }, cfg_.object_grid());
        return image_object(imaging_, f).data;
    }
    const auto& net = source_generator();
    const auto z = LatentVector::prior_draw(net.latent_dim(), rng);
    if (truth) *truth = nlohmann::json{{"latent", z.values}};
    auto out = net.forward(z.values);
    if (cfg_.generator.domain == SomDomain::object) return image_object(imaging_, out).data;
    return out;
}

Measurement Experiment::make_case(std::size_t id, nlohmann::json* truth) const {
    if (id >= cfg_.case_count()) throw std::out_of_range("make_case: case id out of range");
    const std::uint64_t seed = case_seed(cfg_, id);
    Rng bg_rng(derive_seed(seed, "background"));
    Rng noise_rng(derive_seed(seed, "noise"));
    nlohmann::json realization;
    Measurement g = task_.signal;
    g.data = sample_background(bg_rng, &realization);
    require_same_size(g.data.size(), task_.signal.size(), "make_case background vs signal");
    if (signal_present(id))
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += task_.signal.data[i];
    g = add_noise(g, task_.noise, noise_rng);
    quantize_to_float32(g);
    if (truth)
        *truth = nlohmann::json{{"case_id", id},
                                {"label", signal_present(id) ? 1 : 0},
                                {"seed", seed},
                                {"background", realization}};
    return g;
}

namespace {

std::pair<GeneratorNet, double> surrogate_from_moments(const Eigen::VectorXd& mean, const Eigen::MatrixXd& K,
                                                       std::size_t latent_dim, GridSize dims) {
    const std::size_t M = std::size_t(mean.size());
    if (latent_dim == 0 || latent_dim > M) throw std::invalid_argument("fit_linear_surrogate: invalid latent dim");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    const Eigen::VectorXd ev = es.eigenvalues().reverse();
    const Eigen::MatrixXd V = es.eigenvectors().rowwise().reverse();
    Eigen::MatrixXd W(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(latent_dim));
    double kept = 0.0, total = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) total += std::max(0.0, ev(i));
    for (Eigen::Index i = 0; i < Eigen::Index(latent_dim); ++i) {
        const double lam = std::max(0.0, ev(i));
        kept += lam;
        W.col(i) = V.col(i) * std::sqrt(lam);
    }
    std::optional<GridSize> grid;
    if (dims.count() == M) grid = dims;
    return {make_linear_generator(W, mean, grid), total > 0.0 ? kept / total : 1.0};
}

}  // namespace

std::pair<GeneratorNet, double> fit_linear_surrogate(std::span<const std::vector<double>> samples,
                                                     std::size_t latent_dim, GridSize dims) {
    if (samples.size() < 2) throw std::invalid_argument("fit_linear_surrogate: need at least two samples");
    const std::size_t M = samples.front().size();
    CovarianceAccumulator acc(M);
    for (const auto& s : samples) {
        require_same_size(s.size(), M, "fit_linear_surrogate");
        acc.push(s);
    }
    const auto [mean, K] = acc.finish();
    return surrogate_from_moments(mean, K, latent_dim, dims);
}

void ensure_surrogate(const Experiment& exp, bool force) {
    const auto& cfg = exp.config();
    if (cfg.generator.path) return;
    const auto& paths = exp.paths();
    const std::string fp = model_fingerprint(cfg);
    if (!force && std::filesystem::exists(paths.surrogate()) && std::filesystem::exists(paths.surrogate_report())) {
        const auto report = nlohmann::json::parse(read_text_file(paths.surrogate_report()));
        if (report.value("fingerprint", "") == fp) return;
        throw ConfigError("models/surrogate.gsom was built from a different config; rerun with --force");
    }
    log_line("fitting linear surrogate: " + std::to_string(cfg.generator.surrogate_samples) + " samples, k = " +
             std::to_string(cfg.generator.surrogate_latent_dim));
    Rng rng(derive_seed(cfg.seed, "surrogate"));
    CovarianceAccumulator acc(exp.task().signal.size());
    for (std::size_t i = 0; i < cfg.generator.surrogate_samples; ++i) acc.push(exp.sample_background(rng));
    const auto [mean, K] = acc.finish();
    const GridSize dims = exp.task().signal.layout == Layout::real ? exp.measurement_dims() : GridSize{};
    auto [net, captured] = surrogate_from_moments(mean, K, cfg.generator.surrogate_latent_dim, dims);
    save_generator(paths.surrogate(), net);
    write_file_atomic(paths.surrogate_report(),
                      nlohmann::json{{"fingerprint", fp},
                                     {"latent_dim", cfg.generator.surrogate_latent_dim},
                                     {"samples", cfg.generator.surrogate_samples},
                                     {"variance_captured", captured}}
                          .dump(2));
}

Eigen::VectorXd ensure_ho_template(const Experiment& exp, bool force) {
    const auto& cfg = exp.config();
    const auto& path = exp.paths().ho_template();
    const std::string fp = model_fingerprint(cfg) + ":" + std::to_string(cfg.evaluation.ho_samples);
    if (!force && std::filesystem::exists(path)) {
        const auto j = nlohmann::json::parse(read_text_file(path));
        if (j.value("fingerprint", "") == fp) {
            const auto w = j.at("template").get<std::vector<double>>();
            return Eigen::Map<const Eigen::VectorXd>(w.data(), Eigen::Index(w.size()));
        }
    }
    log_line("estimating background covariance for the Hotelling template: " +
             std::to_string(cfg.evaluation.ho_samples) + " samples");
    Rng rng(derive_seed(cfg.seed, "ho"));
    CovarianceAccumulator acc(exp.task().signal.size());
    for (std::size_t i = 0; i < cfg.evaluation.ho_samples; ++i) acc.push(exp.sample_background(rng));
    auto [mean, K] = acc.finish();
    K = (K + K.transpose()).eval() * 0.5;
    const Eigen::VectorXd w = ho_template(K, cfg.task.noise.sigma, exp.task().signal.data);
    write_file_atomic(path, nlohmann::json{{"fingerprint", fp},
                                           {"samples", cfg.evaluation.ho_samples},
                                           {"template", std::vector<double>(w.data(), w.data() + w.size())}}
                                .dump());
    return w;
}

}  // namespace iomc::harness
