#include "harness/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "harness/parallel.hpp"
#include "iomc/evaluation.hpp"
#include "iomc/mcmc.hpp"

namespace iomc::harness {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Eigen::MatrixXd measurement_covariance(const Eigen::MatrixXd& W, double sigma) {
    Eigen::MatrixXd K = W * W.transpose();
    K.diagonal().array() += sigma * sigma;
    return K;
}

}  // namespace

double gaussian_io_auc(const Eigen::MatrixXd& W, double sigma, std::span<const double> s) {
    Eigen::Map<const Eigen::VectorXd> sv(s.data(), Eigen::Index(s.size()));
    const Eigen::LLT<Eigen::MatrixXd> llt(measurement_covariance(W, sigma));
    const double d2 = sv.dot(llt.solve(sv));
    return normal_cdf(std::sqrt(d2) / std::sqrt(2.0));
}

double gaussian_log_likelihood_ratio(const Eigen::MatrixXd& W, const Eigen::VectorXd& c, double sigma,
                                     std::span<const double> s, std::span<const double> g) {
    Eigen::Map<const Eigen::VectorXd> sv(s.data(), Eigen::Index(s.size()));
    Eigen::Map<const Eigen::VectorXd> gv(g.data(), Eigen::Index(g.size()));
    const Eigen::LLT<Eigen::MatrixXd> llt(measurement_covariance(W, sigma));
    const Eigen::VectorXd t = llt.solve(sv);
    return t.dot(gv - c) - 0.5 * t.dot(sv);
}

GaussianOracleSetup make_gaussian_oracle(const GaussianOracleOptions& o) {
    if (o.latent_dim == 0 || !o.grid.valid()) throw std::invalid_argument("gaussian oracle: invalid dimensions");
    const auto N = Eigen::Index(o.grid.count());
    const auto k = Eigen::Index(o.latent_dim);

    // Smooth background modes: Gaussian blobs at random positions.
    Rng rng(derive_seed(o.seed, "oracle/model"));
    std::uniform_real_distribution<double> ux(0.0, o.grid.width), uy(0.0, o.grid.height);
    std::uniform_real_distribution<double> amp(0.5, 1.5);
    Eigen::MatrixXd W0 = Eigen::MatrixXd::Zero(N, k);
    if (!o.constant_generator) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const Point2 center{ux(rng), uy(rng)};
            const double a = amp(rng);
            for (int y = 0; y < o.grid.height; ++y)
                for (int x = 0; x < o.grid.width; ++x)
                    W0(Eigen::Index(y) * o.grid.width + x, j) =
                        a * std::exp(-squared_distance({double(x), double(y)}, center) / (2.0 * 9.0));
        }
    }
    const Eigen::VectorXd c0 = Eigen::VectorXd::Constant(N, 1.0);

    GaussianOracleSetup setup{make_linear_generator(W0, c0, o.grid), {}, {}, {}, 1.0, 0.5};
    std::tie(setup.W, setup.c) = linear_generator_weights(setup.net);

    GaussianSignal sig{1.0, 1.5, {o.grid.width / 2.0, o.grid.height / 2.0}};
    setup.signal = Measurement{rasterize([&](Point2 p) { return eval_signal_field(sig, p); }, o.grid), Layout::real,
                               o.grid};

    if (o.constant_generator) {
        setup.sigma = 1.0;
    } else {
        if (!(o.target_auc > 0.5 && o.target_auc < 1.0))
            throw std::invalid_argument("gaussian oracle: target AUC must lie in (0.5, 1)");
        double lo = 1e-3, hi = 1e3;
        for (int it = 0; it < 200; ++it) {
            const double mid = std::sqrt(lo * hi);
            if (gaussian_io_auc(setup.W, mid, setup.signal.data) > o.target_auc)
                lo = mid;
            else
                hi = mid;
        }
        setup.sigma = std::sqrt(lo * hi);
    }
    setup.analytic_auc = gaussian_io_auc(setup.W, setup.sigma, setup.signal.data);
    return setup;
}

double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    require_same_size(a.size(), b.size(), "pearson_correlation");
    const auto n = double(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

GaussianOracleResult run_gaussian_oracle(const GaussianOracleOptions& o) {
    const GaussianOracleSetup setup = make_gaussian_oracle(o);
    DetectionTask task;
    task.signal = setup.signal;
    task.noise = {NoiseKind::iid_gaussian, setup.sigma};
    task.name = "gaussian-oracle";
    SomBinding binding;
    binding.mode = SomDomain::image;

    const std::size_t n = o.n0 + o.n1;
    std::vector<double> estimated(n), exact(n);
    parallel_for(n, o.threads, [&](std::size_t id) {
        const std::uint64_t case_seed = derive_seed(o.seed, "oracle/case", id);
        Rng rng(derive_seed(case_seed, "data"));
        const auto z = LatentVector::prior_draw(o.latent_dim, rng);
        Measurement g{setup.net.forward(z.values), Layout::real, o.grid};
        if (id >= o.n0)
            for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += setup.signal.data[i];
        g = add_noise(g, task.noise, rng);

        ChainConfig cfg;
        cfg.n_iterations = o.iterations;
        cfg.burn_in = o.burn_in;
        cfg.beta = o.beta;
        cfg.auto_tune = o.auto_tune;
        cfg.seed = derive_seed(case_seed, "chain");
        const ChainRecord rec = run_latent_chain(task, setup.net, binding, g, cfg);
        estimated[id] = estimate_log_likelihood_ratio(rec);
        exact[id] = o.constant_generator
                        ? log_bke_likelihood_ratio(g.data, std::span<const double>(setup.c.data(), setup.c.size()),
                                                   setup.signal.data, setup.sigma)
                        : gaussian_log_likelihood_ratio(setup.W, setup.c, setup.sigma, setup.signal.data, g.data);
    });

    GaussianOracleResult r;
    r.sigma = setup.sigma;
    r.analytic_auc = setup.analytic_auc;
    for (std::size_t id = 0; id < n; ++id) {
        auto& est = id < o.n0 ? r.estimated.h0 : r.estimated.h1;
        auto& ex = id < o.n0 ? r.exact.h0 : r.exact.h1;
        est.push_back(estimated[id]);
        ex.push_back(exact[id]);
        r.max_abs_error = std::max(r.max_abs_error, std::abs(estimated[id] - exact[id]));
    }
    r.estimated_auc = auc_mann_whitney(r.estimated);
    r.exact_auc = auc_mann_whitney(r.exact);
    r.pearson_r = pearson_correlation(estimated, exact);
    return r;
}

nlohmann::json to_json(const GaussianOracleResult& r) {
    return {{"sigma", r.sigma},
            {"analytic_auc", r.analytic_auc},
            {"estimated_auc", r.estimated_auc},
            {"exact_score_auc", r.exact_auc},
            {"pearson_r", r.pearson_r},
            {"max_abs_error", r.max_abs_error},
            {"n0", r.estimated.h0.size()},
            {"n1", r.estimated.h1.size()}};
}

}  // namespace iomc::harness
