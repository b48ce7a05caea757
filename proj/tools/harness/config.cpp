#include "harness/config.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "iomc/file_util.hpp"

namespace iomc::harness {

std::string to_string(ObserverKind o) {
    switch (o) {
        case ObserverKind::mcmc_gan: return "mcmc_gan";
        case ObserverKind::mcmc_lb: return "mcmc_lb";
        case ObserverKind::ho: return "ho";
    }
    return "?";
}

std::string to_string(ImagingKind k) {
    switch (k) {
        case ImagingKind::prf: return "prf";
        case ImagingKind::identity: return "identity";
        case ImagingKind::fourier: return "fourier";
    }
    return "?";
}

std::string to_string(BackgroundSource s) { return s == BackgroundSource::lumpy ? "lumpy" : "generator"; }

bool ExperimentConfig::has_observer(ObserverKind o) const {
    return std::find(evaluation.observers.begin(), evaluation.observers.end(), o) != evaluation.observers.end();
}

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!node) return;
    if (!node.IsMap()) fail(where + " must be a mapping");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.count(key)) fail("unknown key '" + key + "' in " + (where.empty() ? "top level" : where));
    }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
    const YAML::Node v = node[key];
    if (!v || v.IsNull()) return;
    try {
        out = v.as<T>();
    } catch (const YAML::Exception&) {
        fail(where + "." + key + ": invalid value");
    }
}

GridSize read_grid(const YAML::Node& v, const std::string& where) {
    if (!v.IsSequence() || v.size() != 2) fail(where + " must be [width, height]");
    return {v[0].as<int>(), v[1].as<int>()};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

ObserverKind parse_observer(const std::string& s) {
    if (s == "mcmc_gan") return ObserverKind::mcmc_gan;
    if (s == "mcmc_lb") return ObserverKind::mcmc_lb;
    if (s == "ho") return ObserverKind::ho;
    fail("unknown observer '" + s + "' (expected mcmc_gan, mcmc_lb or ho)");
}

void read_chain_common(const YAML::Node& n, ChainConfig& c, const std::string& where) {
    read(n, "iterations", c.n_iterations, where);
    read(n, "burn_in", c.burn_in, where);
    read(n, "auto_tune", c.auto_tune, where);
    read(n, "tune_interval", c.tune_interval, where);
    read(n, "thinning", c.thinning, where);
    if (const auto t = n["target_acceptance"]; t && !t.IsNull()) {
        if (!t.IsSequence() || t.size() != 2) fail(where + ".target_acceptance must be [low, high]");
        c.target_low = t[0].as<double>();
        c.target_high = t[1].as<double>();
    }
}

void parse_task(const YAML::Node& t, TaskBlock& task, const std::filesystem::path& base) {
    check_keys(t, "task", {"background", "lumpy", "imaging", "prf", "fourier", "signal", "noise"});
    if (!t) return;
    if (const auto b = t["background"]) {
        const auto s = b.as<std::string>();
        if (s == "lumpy")
            task.background = BackgroundSource::lumpy;
        else if (s == "generator")
            task.background = BackgroundSource::generator;
        else
            fail("task.background must be lumpy or generator");
    }
    if (const auto l = t["lumpy"]) {
        check_keys(l, "task.lumpy", {"mean_lumps", "amplitude", "width", "fov", "fixed_count"});
        read(l, "mean_lumps", task.lumpy.mean_lumps, "task.lumpy");
        read(l, "amplitude", task.lumpy.amplitude, "task.lumpy");
        read(l, "width", task.lumpy.width, "task.lumpy");
        if (l["fov"]) task.lumpy.fov = read_grid(l["fov"], "task.lumpy.fov");
        if (l["fixed_count"] && !l["fixed_count"].IsNull()) task.lumpy.fixed_count = l["fixed_count"].as<std::size_t>();
    }
    if (const auto i = t["imaging"]) {
        const auto s = i.as<std::string>();
        if (s == "prf")
            task.imaging = ImagingKind::prf;
        else if (s == "identity")
            task.imaging = ImagingKind::identity;
        else if (s == "fourier")
            task.imaging = ImagingKind::fourier;
        else
            fail("task.imaging must be prf, identity or fourier");
    }
    if (const auto p = t["prf"]) {
        check_keys(p, "task.prf", {"height", "width"});
        read(p, "height", task.prf.height, "task.prf");
        read(p, "width", task.prf.width, "task.prf");
    }
    if (const auto f = t["fourier"]) {
        check_keys(f, "task.fourier", {"acceleration", "mask", "density"});
        read(f, "acceleration", task.fourier_acceleration, "task.fourier");
        if (f["mask"] && !f["mask"].IsNull()) task.fourier_mask = resolve(base, f["mask"].as<std::string>());
        if (const auto d = f["density"]) {
            check_keys(d, "task.fourier.density", {"base", "slope", "calibration_size"});
            read(d, "base", task.fourier_density.base, "task.fourier.density");
            read(d, "slope", task.fourier_density.slope, "task.fourier.density");
            read(d, "calibration_size", task.fourier_density.calibration_size, "task.fourier.density");
        }
    }
    if (const auto s = t["signal"]) {
        check_keys(s, "task.signal", {"amplitude", "width", "center"});
        read(s, "amplitude", task.signal.amplitude, "task.signal");
        read(s, "width", task.signal.width, "task.signal");
        if (const auto c = s["center"]) {
            if (!c.IsSequence() || c.size() != 2) fail("task.signal.center must be [x, y]");
            task.signal.center = {c[0].as<double>(), c[1].as<double>()};
        }
    }
    if (const auto n = t["noise"]) {
        check_keys(n, "task.noise", {"sigma"});
        read(n, "sigma", task.noise.sigma, "task.noise");
    }
    task.noise.kind = task.imaging == ImagingKind::fourier ? NoiseKind::iid_complex_gaussian : NoiseKind::iid_gaussian;
}

void parse_chain(const YAML::Node& c, ChainBlock& chain) {
    check_keys(c, "chain",
               {"auto_tune", "target_acceptance", "tune_interval", "thinning", "diagnostic_chains", "diagnostic_cases",
                "psfr_stride", "autocorrelation_lags", "mcmc_gan", "mcmc_lb"});
    if (!c) return;
    read_chain_common(c, chain.gan, "chain");
    read_chain_common(c, chain.lumpy, "chain");
    read(c, "diagnostic_chains", chain.diagnostic_chains, "chain");
    read(c, "psfr_stride", chain.psfr_stride, "chain");
    read(c, "autocorrelation_lags", chain.autocorrelation_lags, "chain");
    if (const auto d = c["diagnostic_cases"]; d && !d.IsNull()) {
        if (!d.IsSequence()) fail("chain.diagnostic_cases must be a list of case ids");
        chain.diagnostic_cases = d.as<std::vector<std::size_t>>();
    }
    if (const auto g = c["mcmc_gan"]) {
        check_keys(g, "chain.mcmc_gan",
                   {"iterations", "burn_in", "beta", "auto_tune", "target_acceptance", "tune_interval", "thinning"});
        read_chain_common(g, chain.gan, "chain.mcmc_gan");
        read(g, "beta", chain.gan.beta, "chain.mcmc_gan");
    }
    if (const auto l = c["mcmc_lb"]) {
        check_keys(l, "chain.mcmc_lb",
                   {"iterations", "burn_in", "step", "moves", "auto_tune", "target_acceptance", "tune_interval",
                    "thinning"});
        read_chain_common(l, chain.lumpy, "chain.mcmc_lb");
        read(l, "step", chain.lumpy_options.step_sigma, "chain.mcmc_lb");
        if (const auto m = l["moves"]) {
            check_keys(m, "chain.mcmc_lb.moves", {"walk", "birth", "death"});
            read(m, "walk", chain.lumpy_options.mix.walk, "chain.mcmc_lb.moves");
            read(m, "birth", chain.lumpy_options.mix.birth, "chain.mcmc_lb.moves");
            read(m, "death", chain.lumpy_options.mix.death, "chain.mcmc_lb.moves");
        }
    }
}

void parse_evaluation(const YAML::Node& e, EvaluationBlock& ev) {
    check_keys(e, "evaluation", {"n0", "n1", "observers", "ho_samples", "stderr", "spectrum"});
    if (!e) return;
    read(e, "n0", ev.n0, "evaluation");
    read(e, "n1", ev.n1, "evaluation");
    read(e, "ho_samples", ev.ho_samples, "evaluation");
    if (const auto o = e["observers"]) {
        if (!o.IsSequence()) fail("evaluation.observers must be a list");
        ev.observers.clear();
        for (const auto& x : o) ev.observers.push_back(parse_observer(x.as<std::string>()));
    }
    if (const auto s = e["stderr"]) {
        check_keys(s, "evaluation.stderr", {"method", "bootstrap"});
        if (const auto m = s["method"]) {
            const auto v = m.as<std::string>();
            if (v == "hanley_mcneil")
                ev.stderr_options.method = AucSeMethod::hanley_mcneil;
            else if (v == "bootstrap")
                ev.stderr_options.method = AucSeMethod::bootstrap;
            else
                fail("evaluation.stderr.method must be hanley_mcneil or bootstrap");
        }
        read(s, "bootstrap", ev.stderr_options.n_bootstrap, "evaluation.stderr");
    }
    if (const auto s = e["spectrum"]) {
        check_keys(s, "evaluation.spectrum", {"images", "bins", "band"});
        read(s, "images", ev.spectrum_images, "evaluation.spectrum");
        read(s, "bins", ev.spectrum_bins, "evaluation.spectrum");
        read(s, "band", ev.spectrum_band, "evaluation.spectrum");
    }
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string file_digest(const std::optional<std::filesystem::path>& p) {
    if (!p) return "";
    if (!std::filesystem::exists(*p)) return "missing";
    const auto bytes = read_file_bytes(*p);
    return hex64(fnv1a(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
}

nlohmann::json chain_json(const ChainConfig& c) {
    return {{"iterations", c.n_iterations}, {"burn_in", c.burn_in},         {"beta", c.beta},
            {"auto_tune", c.auto_tune},     {"target_low", c.target_low},   {"target_high", c.target_high},
            {"tune_interval", c.tune_interval}, {"thinning", c.thinning}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        fail(std::string("parse error: ") + e.what());
    }
    if (!root.IsMap()) fail("top level must be a mapping");
    check_keys(root, "", {"name", "seed", "output_dir", "threads", "task", "generator", "chain", "evaluation"});

    ExperimentConfig cfg;
    try {
        read(root, "name", cfg.name, "");
        read(root, "seed", cfg.seed, "");
        read(root, "threads", cfg.threads, "");
        if (root["output_dir"]) cfg.output_dir = resolve(base_dir, root["output_dir"].as<std::string>());
        parse_task(root["task"], cfg.task, base_dir);
        if (const auto g = root["generator"]) {
            check_keys(g, "generator", {"path", "domain", "surrogate"});
            if (g["path"] && !g["path"].IsNull()) cfg.generator.path = resolve(base_dir, g["path"].as<std::string>());
            if (const auto d = g["domain"]) {
                const auto s = d.as<std::string>();
                if (s == "image")
                    cfg.generator.domain = SomDomain::image;
                else if (s == "object")
                    cfg.generator.domain = SomDomain::object;
                else
                    fail("generator.domain must be image or object");
            }
            if (const auto s = g["surrogate"]) {
                check_keys(s, "generator.surrogate", {"latent_dim", "samples"});
                read(s, "latent_dim", cfg.generator.surrogate_latent_dim, "generator.surrogate");
                read(s, "samples", cfg.generator.surrogate_samples, "generator.surrogate");
            }
        }
        parse_chain(root["chain"], cfg.chain);
        parse_evaluation(root["evaluation"], cfg.evaluation);
    } catch (const YAML::Exception& e) {
        fail(e.what());
    }
    cfg.task.prf.grid = cfg.task.lumpy.fov;
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(text, path.parent_path());
}

void ExperimentConfig::validate() const {
    try {
        task.lumpy.validate();
        task.signal.validate();
        task.noise.validate();
        GaussianPrfSystem sys = task.prf;
        sys.grid = object_grid();
        sys.validate();
        chain.gan.validate();
        chain.lumpy.validate();
        chain.lumpy_options.mix.validate();
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (evaluation.n0 == 0 || evaluation.n1 == 0) fail("evaluation.n0 and evaluation.n1 must be >= 1");
    if (evaluation.observers.empty()) fail("evaluation.observers must not be empty");
    if (chain.diagnostic_chains < 1) fail("chain.diagnostic_chains must be >= 1");
    if (chain.psfr_stride < 1) fail("chain.psfr_stride must be >= 1");
    if (task.imaging == ImagingKind::fourier && !(task.fourier_acceleration >= 1.0))
        fail("task.fourier.acceleration must be >= 1");
    if (task.fourier_mask && !std::filesystem::exists(*task.fourier_mask))
        fail("task.fourier.mask: file not found: " + task.fourier_mask->string());
    if (generator.path && !std::filesystem::exists(*generator.path))
        fail("generator.path: file not found: " + generator.path->string());
    if (task.background == BackgroundSource::generator && !generator.path)
        fail("task.background = generator requires generator.path");
    if (!generator.path && generator.domain == SomDomain::object)
        fail("the linear surrogate lives in the measurement domain; generator.domain must be image");
    if (has_observer(ObserverKind::mcmc_lb)) {
        if (task.background != BackgroundSource::lumpy || task.imaging != ImagingKind::prf)
            fail("mcmc_lb needs task.background = lumpy and task.imaging = prf");
        if (task.lumpy.fixed_count.has_value() == chain.lumpy_options.mix.trans_dimensional())
            fail(task.lumpy.fixed_count ? "chain.mcmc_lb.moves: birth/death must be 0 with a fixed lump count"
                                        : "chain.mcmc_lb.moves: a Poisson lump count needs birth/death moves");
    }
    if (has_observer(ObserverKind::mcmc_gan) && !generator.path &&
        (generator.surrogate_latent_dim == 0 || generator.surrogate_samples < 2))
        fail("generator.surrogate needs latent_dim >= 1 and samples >= 2");
    if (has_observer(ObserverKind::ho) && evaluation.ho_samples < 2) fail("evaluation.ho_samples must be >= 2");
    for (std::size_t id : chain.diagnostic_cases)
        if (id >= case_count()) fail("chain.diagnostic_cases: case " + std::to_string(id) + " out of range");
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    const auto& t = cfg.task;
    nlohmann::json task{{"background", to_string(t.background)},
                        {"lumpy", t.lumpy},
                        {"imaging", to_string(t.imaging)},
                        {"prf", {{"height", t.prf.height}, {"width", t.prf.width}}},
                        {"fourier",
                         {{"acceleration", t.fourier_acceleration},
                          {"density",
                           {{"base", t.fourier_density.base},
                            {"slope", t.fourier_density.slope},
                            {"calibration_size", t.fourier_density.calibration_size}}},
                          {"mask", t.fourier_mask ? t.fourier_mask->string() : ""},
                          {"mask_digest", file_digest(t.fourier_mask)}}},
                        {"signal", t.signal},
                        {"noise", {{"sigma", t.noise.sigma}}}};
    nlohmann::json gen{{"path", cfg.generator.path ? cfg.generator.path->string() : ""},
                       {"digest", file_digest(cfg.generator.path)},
                       {"domain", cfg.generator.domain == SomDomain::image ? "image" : "object"},
                       {"surrogate",
                        {{"latent_dim", cfg.generator.surrogate_latent_dim},
                         {"samples", cfg.generator.surrogate_samples}}}};
    const auto& mix = cfg.chain.lumpy_options.mix;
    nlohmann::json chain{{"mcmc_gan", chain_json(cfg.chain.gan)},
                         {"mcmc_lb", chain_json(cfg.chain.lumpy)},
                         {"lumpy_step", cfg.chain.lumpy_options.step_sigma},
                         {"moves", {{"walk", mix.walk}, {"birth", mix.birth}, {"death", mix.death}}},
                         {"diagnostic_chains", cfg.chain.diagnostic_chains},
                         {"diagnostic_cases", cfg.chain.diagnostic_cases},
                         {"psfr_stride", cfg.chain.psfr_stride},
                         {"autocorrelation_lags", cfg.chain.autocorrelation_lags}};
    std::vector<std::string> observers;
    for (auto o : cfg.evaluation.observers) observers.push_back(to_string(o));
    const auto& ev = cfg.evaluation;
    nlohmann::json eval{
        {"n0", ev.n0},
        {"n1", ev.n1},
        {"observers", observers},
        {"ho_samples", ev.ho_samples},
        {"stderr",
         {{"method", ev.stderr_options.method == AucSeMethod::bootstrap ? "bootstrap" : "hanley_mcneil"},
          {"bootstrap", ev.stderr_options.n_bootstrap}}},
        {"spectrum", {{"images", ev.spectrum_images}, {"bins", ev.spectrum_bins}, {"band", ev.spectrum_band}}}};
    return {{"name", cfg.name}, {"seed", cfg.seed},   {"task", task},
            {"generator", gen}, {"chain", chain}, {"evaluation", eval}};
}

std::string data_fingerprint(const ExperimentConfig& cfg) {
    const auto j = config_to_json(cfg);
    nlohmann::json d{{"seed", j["seed"]}, {"task", j["task"]}, {"n0", cfg.evaluation.n0}, {"n1", cfg.evaluation.n1}};
    if (cfg.task.background == BackgroundSource::generator) d["generator"] = j["generator"];
    return hex64(fnv1a(d.dump()));
}

std::string model_fingerprint(const ExperimentConfig& cfg) {
    const auto j = config_to_json(cfg);
    nlohmann::json d{{"seed", j["seed"]}, {"task", j["task"]}, {"generator", j["generator"]}};
    return hex64(fnv1a(d.dump()));
}

std::string chain_fingerprint(const ExperimentConfig& cfg, ObserverKind observer) {
    const auto j = config_to_json(cfg);
    nlohmann::json d{{"data", data_fingerprint(cfg)}, {"observer", to_string(observer)}};
    if (observer == ObserverKind::mcmc_gan) {
        d["model"] = model_fingerprint(cfg);
        d["chain"] = j["chain"]["mcmc_gan"];
    } else {
        d["chain"] = j["chain"]["mcmc_lb"];
        d["step"] = j["chain"]["lumpy_step"];
        d["moves"] = j["chain"]["moves"];
    }
    return hex64(fnv1a(d.dump()));
}

}  // namespace iomc::harness
