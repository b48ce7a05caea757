#include "harness/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <mutex>

#include <nlohmann/json.hpp>

#include "harness/log.hpp"
#include "harness/parallel.hpp"
#include "iomc/file_util.hpp"

namespace iomc::harness {

namespace {

std::string timestamp_utc() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

/// "3, 5..9, 12"
std::string compress_ids(std::vector<std::size_t> ids) {
    std::sort(ids.begin(), ids.end());
    std::string out;
    for (std::size_t i = 0; i < ids.size();) {
        std::size_t j = i;
        while (j + 1 < ids.size() && ids[j + 1] == ids[j] + 1) ++j;
        if (!out.empty()) out += ", ";
        out += std::to_string(ids[i]);
        if (j > i) out += ".." + std::to_string(ids[j]);
        i = j + 1;
    }
    return out;
}

std::optional<nlohmann::json> read_json_if_exists(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) return std::nullopt;
    try {
        return nlohmann::json::parse(read_text_file(p));
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

std::vector<ObserverKind> mcmc_observers(const ExperimentConfig& cfg) {
    std::vector<ObserverKind> out;
    for (auto o : cfg.evaluation.observers)
        if (o != ObserverKind::ho) out.push_back(o);
    return out;
}

std::size_t threads_for(const Experiment& exp, const RunOptions& opts) {
    return resolve_threads(opts.threads.value_or(exp.config().threads));
}

void require_dataset(const Experiment& exp, const std::vector<std::size_t>& ids) {
    const auto manifest = read_json_if_exists(exp.paths().manifest());
    if (!manifest) throw IncompleteInputs("no dataset in " + exp.paths().root.string() + "; run gen-data first");
    if (manifest->value("fingerprint", "") != data_fingerprint(exp.config()))
        throw IncompleteInputs("dataset in " + exp.paths().root.string() +
                               " was generated from a different config; rerun gen-data");
    std::vector<std::size_t> missing;
    for (auto id : ids)
        if (!std::filesystem::exists(exp.paths().measurement(id))) missing.push_back(id);
    if (!missing.empty()) throw IncompleteInputs("missing measurements for cases " + compress_ids(missing));
}

ChainRecord run_chain(const Experiment& exp, ObserverKind o, const Measurement& g, std::uint64_t seed) {
    const auto& cfg = exp.config();
    if (o == ObserverKind::mcmc_gan) {
        ChainConfig c = cfg.chain.gan;
        c.seed = seed;
        return run_latent_chain(exp.task(), exp.gan_generator(), exp.gan_binding(), g, c);
    }
    ChainConfig c = cfg.chain.lumpy;
    c.seed = seed;
    return run_lumpy_chain(exp.task(), g, cfg.task.lumpy, c, cfg.chain.lumpy_options);
}

/// Traces as stored on disk (float32), so reports match whether computed
/// right after sampling or later from chain files.
DiagnosticReport diagnose_records(const Experiment& exp, const std::vector<ChainRecord>& records) {
    ChainEnsemble e;
    for (const auto& r : records) {
        std::vector<double> t(r.log_lambda.size());
        std::transform(r.log_lambda.begin(), r.log_lambda.end(), t.begin(),
                       [](double v) { return double(static_cast<float>(v)); });
        e.chains.push_back(std::move(t));
    }
    return diagnose_chains(e, exp.config().chain.psfr_stride, exp.config().chain.autocorrelation_lags);
}

void check_gan_compatible(const Experiment& exp) {
    const auto& net = exp.gan_generator();
    const auto binding = exp.gan_binding();
    const LatentVector z{std::vector<double>(net.latent_dim(), 0.0)};
    std::size_t size = 0;
    try {
        size = generated_background(net, binding, z).size();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("generator/operator mismatch: ") + e.what());
    }
    if (size != exp.task().signal.size())
        throw ConfigError("generator/operator mismatch: generator produces " + std::to_string(size) +
                          " values but measurements have " + std::to_string(exp.task().signal.size()));
}

}  // namespace

CaseRange parse_case_range(const std::string& text) {
    auto parse = [&](const std::string& s) -> std::size_t {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("--cases: expected a..b with non-negative integers, got '" + text + "'");
        return std::stoull(s);
    };
    const auto dots = text.find("..");
    CaseRange r;
    if (dots == std::string::npos) {
        r.first = r.last = parse(text);
    } else {
        r.first = parse(text.substr(0, dots));
        r.last = parse(text.substr(dots + 2));
    }
    if (r.last < r.first) throw ConfigError("--cases: empty range '" + text + "'");
    return r;
}

std::vector<std::size_t> selected_cases(const Experiment& exp, const RunOptions& opts) {
    const std::size_t n = exp.config().case_count();
    std::size_t first = 0, last = n - 1;
    if (opts.cases) {
        if (opts.cases->first >= n)
            throw ConfigError("--cases: first case " + std::to_string(opts.cases->first) + " is beyond the " +
                              std::to_string(n) + " configured cases");
        first = opts.cases->first;
        last = std::min(opts.cases->last, n - 1);
    }
    std::vector<std::size_t> ids;
    for (std::size_t i = first; i <= last; ++i) ids.push_back(i);
    return ids;
}

GenDataResult cmd_gen_data(const Experiment& exp, const RunOptions& opts) {
    const auto& cfg = exp.config();
    const auto& paths = exp.paths();
    const std::string fp = data_fingerprint(cfg);
    if (const auto m = read_json_if_exists(paths.manifest()); m && m->value("fingerprint", "") != fp && !opts.force)
        throw ConfigError("output directory " + paths.root.string() +
                          " holds a dataset from a different config; pass --force to overwrite");

    const auto ids = selected_cases(exp, opts);
    std::vector<std::size_t> todo;
    GenDataResult result;
    for (auto id : ids) {
        if (!opts.force && std::filesystem::exists(paths.measurement(id)) && std::filesystem::exists(paths.truth(id)))
            ++result.skipped;
        else
            todo.push_back(id);
    }
    if (const auto& op = exp.imaging(); op && std::holds_alternative<FourierSamplingOperator>(*op))
        write_mask_pbm(paths.mask(), std::get<FourierSamplingOperator>(*op).mask);

    parallel_for(todo.size(), threads_for(exp, opts), [&](std::size_t i) {
        const std::size_t id = todo[i];
        nlohmann::json truth;
        const Measurement g = exp.make_case(id, &truth);
        write_measurement(paths.measurement(id), g);
        write_file_atomic(paths.truth(id), truth.dump(2));
    });
    result.written = todo.size();

    nlohmann::json cases = nlohmann::json::array();
    for (std::size_t id = 0; id < cfg.case_count(); ++id)
        cases.push_back({{"id", id},
                         {"label", exp.signal_present(id) ? 1 : 0},
                         {"seed", case_seed(cfg, id)},
                         {"measurement", std::filesystem::relative(paths.measurement(id), paths.root).string()}});
    nlohmann::json manifest{{"name", cfg.name},
                            {"fingerprint", fp},
                            {"seed", cfg.seed},
                            {"seed_derivation", "case = derive(seed, \"case\", id); background/noise/chain/<observer> "
                                                "streams derive from the case seed"},
                            {"created", timestamp_utc()},
                            {"n0", cfg.evaluation.n0},
                            {"n1", cfg.evaluation.n1},
                            {"measurement_size", exp.task().signal.size()},
                            {"dims", {exp.measurement_dims().width, exp.measurement_dims().height}},
                            {"config", config_to_json(cfg)},
                            {"cases", cases}};
    write_file_atomic(paths.manifest(), manifest.dump(2));
    log_line("gen-data: wrote " + std::to_string(result.written) + " cases, skipped " +
             std::to_string(result.skipped) + " existing");
    return result;
}

double score_case_in_memory(const Experiment& exp, ObserverKind observer, std::size_t id) {
    if (observer == ObserverKind::ho) {
        const Eigen::VectorXd w = ensure_ho_template(exp, false);
        const Measurement g = exp.make_case(id);
        return ho_test_statistic(std::span<const double>(w.data(), std::size_t(w.size())), g.data);
    }
    const Measurement g = exp.make_case(id);
    return estimate_log_likelihood_ratio(run_chain(exp, observer, g, chain_seed(exp.config(), id, observer, 0)));
}

RunMcmcResult cmd_run_mcmc(const Experiment& exp, const RunOptions& opts) {
    const auto& cfg = exp.config();
    const auto& paths = exp.paths();
    const auto observers = mcmc_observers(cfg);
    RunMcmcResult result;
    if (observers.empty()) {
        log_line("run-mcmc: no MCMC observers configured");
        return result;
    }
    const auto ids = selected_cases(exp, opts);
    require_dataset(exp, ids);
    for (auto o : observers) {
        if (o != ObserverKind::mcmc_gan) continue;
        ensure_surrogate(exp, opts.force);
        check_gan_compatible(exp);
    }

    struct Job {
        ObserverKind observer;
        std::size_t id;
        std::size_t chains;
    };
    std::vector<Job> jobs;
    for (auto o : observers) {
        const std::string fp = chain_fingerprint(cfg, o);
        for (auto id : ids) {
            const bool diagnostic = std::find(cfg.chain.diagnostic_cases.begin(), cfg.chain.diagnostic_cases.end(),
                                              id) != cfg.chain.diagnostic_cases.end();
            const std::size_t chains = opts.chains.value_or(diagnostic ? cfg.chain.diagnostic_chains : 1);
            if (!opts.force) {
                if (const auto s = read_json_if_exists(paths.chain_summary(o, id))) {
                    if (s->value("fingerprint", "") != fp)
                        throw ConfigError("chains for " + case_name(id) + " (" + to_string(o) +
                                          ") come from a different config; pass --force to overwrite");
                    if (s->value("chains", std::size_t{1}) >= chains) {
                        ++result.cases_skipped;
                        continue;
                    }
                }
            }
            jobs.push_back({o, id, chains});
        }
    }

    std::mutex count_mutex;
    parallel_for(jobs.size(), threads_for(exp, opts), [&](std::size_t j) {
        const Job& job = jobs[j];
        const Measurement g = read_measurement(paths.measurement(job.id));
        std::vector<ChainRecord> records;
        for (std::size_t m = 0; m < job.chains; ++m) {
            records.push_back(run_chain(exp, job.observer, g, chain_seed(cfg, job.id, job.observer, m)));
            write_chain(paths.chain(job.observer, job.id, m), records.back());
        }
        nlohmann::json summary = chain_summary(records.front());
        summary["case_id"] = job.id;
        summary["label"] = exp.signal_present(job.id) ? 1 : 0;
        summary["observer"] = to_string(job.observer);
        summary["chains"] = job.chains;
        summary["fingerprint"] = chain_fingerprint(cfg, job.observer);
        std::string psfr_note;
        if (job.chains >= 2) {
            const auto report = diagnose_records(exp, records);
            write_file_atomic(paths.diagnostics(job.observer, job.id), to_json(report).dump(2));
            summary["final_psfr"] = report.final_psfr;
            summary["converged"] = report.converged;
            psfr_note = " psfr=" + fmt("%.4f", report.final_psfr);
        }
        // Written last: its presence marks the case complete.
        write_file_atomic(paths.chain_summary(job.observer, job.id), summary.dump(2));
        log_line("[" + to_string(job.observer) + "] " + case_name(job.id) + (exp.signal_present(job.id) ? " H1" : " H0") +
                 " log_lambda_hat=" + fmt("%.4f", summary.value("log_lambda_hat", 0.0)) +
                 " acceptance=" + fmt("%.3f", records.front().post_burn_in_acceptance_rate()) +
                 " step=" + fmt("%.4g", records.front().step) + psfr_note);
        std::lock_guard lock(count_mutex);
        result.chains_run += job.chains;
    });
    return result;
}

DiagnoseResult cmd_diagnose(const Experiment& exp, const RunOptions& opts) {
    const auto& paths = exp.paths();
    const auto ids = selected_cases(exp, opts);
    DiagnoseResult result;
    std::vector<std::string> missing;
    for (auto o : mcmc_observers(exp.config())) {
        std::vector<std::size_t> absent;
        for (auto id : ids) {
            if (!std::filesystem::exists(paths.chain(o, id, 0))) {
                absent.push_back(id);
                continue;
            }
            std::vector<ChainRecord> records;
            for (std::size_t m = 0; std::filesystem::exists(paths.chain(o, id, m)); ++m)
                records.push_back(read_chain(paths.chain(o, id, m)));
            if (records.size() < 2) continue;
            const auto report = diagnose_records(exp, records);
            write_file_atomic(paths.diagnostics(o, id), to_json(report).dump(2));
            log_line("[" + to_string(o) + "] " + case_name(id) + ": " + std::to_string(records.size()) +
                     " chains, final PSFR " + fmt("%.5f", report.final_psfr) +
                     (report.converged_at ? ", below threshold from iteration " + std::to_string(*report.converged_at)
                                          : ", not converged"));
            result.details.emplace_back(id, report);
            ++result.reports;
        }
        if (!absent.empty()) missing.push_back(to_string(o) + ": cases " + compress_ids(absent));
    }
    if (!missing.empty()) {
        std::string msg = "missing chains (";
        for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? "; " : "") + missing[i];
        throw IncompleteInputs(msg + ")");
    }
    if (result.reports == 0) log_line("diagnose: no case has two or more chains; run run-mcmc with --chains M");
    return result;
}

EvaluateResult cmd_evaluate(const Experiment& exp, const RunOptions& opts) {
    const auto& cfg = exp.config();
    const auto& paths = exp.paths();
    const auto ids = selected_cases(exp, opts);

    // Gather incomplete inputs for every observer before failing.
    std::vector<std::string> problems;
    for (auto o : cfg.evaluation.observers) {
        std::vector<std::size_t> absent;
        if (o == ObserverKind::ho) {
            for (auto id : ids)
                if (!std::filesystem::exists(paths.measurement(id))) absent.push_back(id);
        } else {
            const std::string fp = chain_fingerprint(cfg, o);
            for (auto id : ids) {
                const auto s = read_json_if_exists(paths.chain_summary(o, id));
                if (!s || s->value("fingerprint", "") != fp || !s->contains("log_lambda_hat")) absent.push_back(id);
            }
        }
        if (!absent.empty())
            problems.push_back(to_string(o) + (o == ObserverKind::ho ? " (measurements)" : " (chains)") +
                               ": cases " + compress_ids(absent));
    }
    if (!problems.empty()) {
        std::string msg;
        for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
        throw IncompleteInputs(msg);
    }

    EvaluateResult result;
    nlohmann::json summary = nlohmann::json::array();
    for (auto o : cfg.evaluation.observers) {
        ObserverEvaluation ev{o, {}, {}, {}};
        std::vector<double> score(ids.size());
        if (o == ObserverKind::ho) {
            const Eigen::VectorXd w = ensure_ho_template(exp, opts.force);
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const Measurement g = read_measurement(paths.measurement(ids[i]));
                score[i] = ho_test_statistic(std::span<const double>(w.data(), std::size_t(w.size())), g.data);
            }
        } else {
            for (std::size_t i = 0; i < ids.size(); ++i)
                score[i] = read_json_if_exists(paths.chain_summary(o, ids[i]))->at("log_lambda_hat").get<double>();
        }
        std::vector<std::size_t> h0_ids, h1_ids;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (exp.signal_present(ids[i])) {
                ev.scores.h1.push_back(score[i]);
                h1_ids.push_back(ids[i]);
            } else {
                ev.scores.h0.push_back(score[i]);
                h0_ids.push_back(ids[i]);
            }
        }
        ev.case_ids = h0_ids;
        ev.case_ids.insert(ev.case_ids.end(), h1_ids.begin(), h1_ids.end());
        const std::string name = to_string(o);
        write_scores_csv(paths.eval_dir() / ("scores_" + name + ".csv"), ev.scores, ev.case_ids);
        if (!ev.scores.h0.empty() && !ev.scores.h1.empty()) {
            ev.roc = empirical_roc(ev.scores);
            if (cfg.evaluation.stderr_options.method == AucSeMethod::bootstrap) {
                AucSeOptions se = cfg.evaluation.stderr_options;
                se.seed = derive_seed(cfg.seed, "bootstrap/" + name);
                ev.roc.auc_se = auc_stderr(ev.scores, se);
            }
            write_file_atomic(paths.eval_dir() / ("roc_" + name + ".csv"), roc_to_csv(ev.roc));
            auto j = roc_summary(ev.roc);
            j["observer"] = name;
            summary.push_back(j);
        } else {
            ev.roc.n0 = ev.scores.h0.size();
            ev.roc.n1 = ev.scores.h1.size();
            summary.push_back({{"observer", name}, {"auc", nullptr}, {"auc_se", nullptr},
                               {"n0", ev.roc.n0}, {"n1", ev.roc.n1}});
        }
        result.observers.push_back(std::move(ev));
    }

    std::string table = "observer     AUC      SE       n0    n1\n";
    for (const auto& ev : result.observers) {
        char line[128];
        if (ev.roc.points.empty())
            std::snprintf(line, sizeof line, "%-10s   -        -        %-5zu %-5zu\n", to_string(ev.observer).c_str(),
                          ev.roc.n0, ev.roc.n1);
        else
            std::snprintf(line, sizeof line, "%-10s   %.4f   %.4f   %-5zu %-5zu\n", to_string(ev.observer).c_str(),
                          ev.roc.auc, ev.roc.auc_se, ev.roc.n0, ev.roc.n1);
        table += line;
    }
    result.table = table;
    const std::string se_method =
        cfg.evaluation.stderr_options.method == AucSeMethod::bootstrap ? "bootstrap" : "hanley_mcneil";
    write_file_atomic(paths.eval_dir() / "summary.json",
                      nlohmann::json{{"observers", summary}, {"auc_se_method", se_method}}.dump(2));
    write_file_atomic(paths.eval_dir() / "table.txt", table);
    return result;
}

SpectrumResult cmd_spectrum(const Experiment& exp, const RunOptions& opts) {
    const auto& cfg = exp.config();
    const auto& paths = exp.paths();
    if (!cfg.generator.path) ensure_surrogate(exp, opts.force);
    const auto& net = exp.gan_generator();
    const bool fourier = exp.task().signal.layout == Layout::stacked_complex;
    const GridSize grid = fourier ? cfg.object_grid() : exp.measurement_dims();
    if (fourier && !(cfg.generator.path && cfg.generator.domain == SomDomain::object))
        throw ConfigError("spectrum: k-space tasks compare object images; needs an object-domain generator file");

    const std::size_t n = cfg.evaluation.spectrum_images;
    std::vector<std::vector<double>> real(n), generated(n);
    Rng real_rng(derive_seed(cfg.seed, "spectrum/real"));
    Rng gen_rng(derive_seed(cfg.seed, "spectrum/generated"));
    const auto binding = exp.gan_binding();
    for (std::size_t i = 0; i < n; ++i) {
        real[i] = fourier ? exp.sample_object(real_rng) : exp.sample_background(real_rng);
        const auto z = LatentVector::prior_draw(net.latent_dim(), gen_rng);
        generated[i] = fourier ? net.forward(z.values) : generated_background(net, binding, z).data;
        require_same_size(generated[i].size(), grid.count(), "spectrum generated image");
    }
    const std::size_t bins =
        cfg.evaluation.spectrum_bins ? cfg.evaluation.spectrum_bins : std::size_t(std::min(grid.width, grid.height) / 2);
    SpectrumResult result;
    result.real = radial_power_spectrum(real, grid, bins);
    result.generated = radial_power_spectrum(generated, grid, bins);
    result.max_relative_deviation = max_relative_band_deviation(result.generated, result.real, true);
    write_file_atomic(paths.spectrum_dir() / "real.csv", spectrum_to_csv(result.real));
    write_file_atomic(paths.spectrum_dir() / "generated.csv", spectrum_to_csv(result.generated));
    write_file_atomic(paths.spectrum_dir() / "summary.json",
                      nlohmann::json{{"images", n},
                                     {"bins", bins},
                                     {"max_relative_deviation", result.max_relative_deviation},
                                     {"band", cfg.evaluation.spectrum_band},
                                     {"within_band", result.max_relative_deviation <= cfg.evaluation.spectrum_band}}
                          .dump(2));
    log_line("spectrum: max relative deviation outside DC " + fmt("%.4f", result.max_relative_deviation) +
             " (band " + fmt("%.2f", cfg.evaluation.spectrum_band) + ")");
    return result;
}

}  // namespace iomc::harness
