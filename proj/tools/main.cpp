#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "harness/commands.hpp"
#include "harness/log.hpp"
#include "harness/oracle.hpp"
#include "iomc/file_util.hpp"

namespace h = iomc::harness;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIncomplete = 3;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string cases;
    std::optional<std::size_t> chains;
    bool force = false;
    std::string output_dir;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Common& c, bool with_chains) {
    cmd->add_option("--config", c.config, "experiment config (YAML or JSON)")->required();
    cmd->add_option("--seed", c.seed, "override the master seed");
    cmd->add_option("--cases", c.cases, "inclusive case-id range a..b");
    if (with_chains) cmd->add_option("--chains", c.chains, "chains per case (>= 2 also writes a PSFR report)");
    cmd->add_flag("--force", c.force, "overwrite artifacts from a different config");
    cmd->add_option("--output-dir", c.output_dir, "override output_dir");
    cmd->add_option("--threads", c.threads, "worker threads over cases (0 = all cores)");
}

h::Experiment build(const Common& c, h::RunOptions& opts) {
    auto cfg = h::load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
    if (c.chains && *c.chains == 0) throw h::ConfigError("--chains must be >= 1");
    opts.chains = c.chains;
    opts.force = c.force;
    opts.threads = c.threads;
    if (!c.cases.empty()) opts.cases = h::parse_case_range(c.cases);
    return h::Experiment(std::move(cfg));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iomc: MCMC approximation of the ideal observer for SKE/BKS detection tasks"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "suppress progress output");

    Common gen, run, diag, eval, spec;
    auto* gen_cmd = app.add_subcommand("gen-data", "simulate measurements for all cases");
    add_common(gen_cmd, gen, false);
    auto* run_cmd = app.add_subcommand("run-mcmc", "run MCMC-GAN / MCMC-LB chains per case");
    add_common(run_cmd, run, true);
    auto* diag_cmd = app.add_subcommand("diagnose", "PSFR and autocorrelation of multi-chain cases");
    add_common(diag_cmd, diag, false);
    auto* eval_cmd = app.add_subcommand("evaluate", "ROC/AUC per observer");
    add_common(eval_cmd, eval, false);
    auto* spec_cmd = app.add_subcommand("spectrum", "radial power spectra of real vs generated backgrounds");
    add_common(spec_cmd, spec, false);

    h::GaussianOracleOptions oracle;
    std::string oracle_out;
    int oracle_size = 16;
    auto* oracle_cmd = app.add_subcommand("oracle-check", "MCMC-GAN vs closed-form IO on a linear Gaussian generator");
    oracle_cmd->add_option("--seed", oracle.seed, "master seed");
    oracle_cmd->add_option("--latent-dim", oracle.latent_dim, "k")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--size", oracle_size, "image side length")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--n0", oracle.n0, "signal-absent cases")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--n1", oracle.n1, "signal-present cases")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--iterations", oracle.iterations, "chain length")->check(CLI::PositiveNumber);
    oracle_cmd->add_option("--burn-in", oracle.burn_in, "burn-in");
    oracle_cmd->add_option("--target-auc", oracle.target_auc, "analytic AUC used to pick sigma");
    oracle_cmd->add_flag("--constant", oracle.constant_generator, "W = 0 (BKE-degenerate check)");
    oracle_cmd->add_option("--threads", oracle.threads, "worker threads");
    oracle_cmd->add_option("--output", oracle_out, "write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    h::set_logging(!quiet);

    try {
        h::RunOptions opts;
        if (*gen_cmd) {
            h::cmd_gen_data(build(gen, opts), opts);
        } else if (*run_cmd) {
            const auto r = h::cmd_run_mcmc(build(run, opts), opts);
            h::log_line("run-mcmc: " + std::to_string(r.chains_run) + " chains run, " +
                        std::to_string(r.cases_skipped) + " complete cases skipped");
        } else if (*diag_cmd) {
            h::cmd_diagnose(build(diag, opts), opts);
        } else if (*eval_cmd) {
            const auto r = h::cmd_evaluate(build(eval, opts), opts);
            std::cout << r.table;
        } else if (*spec_cmd) {
            const auto r = h::cmd_spectrum(build(spec, opts), opts);
            std::printf("max relative band deviation (excluding DC): %.4f\n", r.max_relative_deviation);
        } else if (*oracle_cmd) {
            oracle.grid = {oracle_size, oracle_size};
            if (oracle.burn_in >= oracle.iterations) throw h::ConfigError("--burn-in must be < --iterations");
            const auto r = h::run_gaussian_oracle(oracle);
            const auto j = h::to_json(r);
            std::cout << j.dump(2) << "\n";
            if (!oracle_out.empty()) iomc::write_file_atomic(oracle_out, j.dump(2));
        }
    } catch (const h::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const h::IncompleteInputs& e) {
        std::fprintf(stderr, "incomplete inputs: %s\n", e.what());
        return kExitIncomplete;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
