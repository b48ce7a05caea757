#include "iomc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "iomc/rng.hpp"

namespace iomc {

namespace {

void require_nonempty(const ObserverScoreSet& s, const char* what) {
    if (s.h0.empty() || s.h1.empty()) throw std::invalid_argument(std::string(what) + ": empty class");
}

// 2 * wins + ties over all (h0, h1) pairs, in exact integer arithmetic.
std::uint64_t doubled_pair_credit(std::vector<double> h0, std::span<const double> h1) {
    std::sort(h0.begin(), h0.end());
    std::uint64_t credit = 0;
    for (double s1 : h1) {
        const auto lo = std::lower_bound(h0.begin(), h0.end(), s1);
        const auto hi = std::upper_bound(lo, h0.end(), s1);
        credit += 2 * std::uint64_t(lo - h0.begin()) + std::uint64_t(hi - lo);
    }
    return credit;
}

double auc_from_credit(std::uint64_t credit, std::size_t n0, std::size_t n1) {
    return double(credit) / (2.0 * double(n0) * double(n1));
}

}  // namespace

double auc_mann_whitney(const ObserverScoreSet& scores) {
    require_nonempty(scores, "auc_mann_whitney");
    return auc_from_credit(doubled_pair_credit(scores.h0, scores.h1), scores.h0.size(), scores.h1.size());
}

RocResult empirical_roc(const ObserverScoreSet& scores) {
    require_nonempty(scores, "empirical_roc");
    const std::size_t n0 = scores.h0.size();
    const std::size_t n1 = scores.h1.size();

    std::vector<double> h0 = scores.h0, h1 = scores.h1;
    std::sort(h0.begin(), h0.end(), std::greater<>());
    std::sort(h1.begin(), h1.end(), std::greater<>());

    RocResult roc;
    roc.n0 = n0;
    roc.n1 = n1;
    roc.points.push_back({0.0, 0.0});

    // fp, tp: counts at or above the current threshold.
    std::size_t i0 = 0, i1 = 0;
    std::uint64_t fp = 0, tp = 0, area = 0;
    while (i0 < n0 || i1 < n1) {
        double t;
        if (i0 == n0)
            t = h1[i1];
        else if (i1 == n1)
            t = h0[i0];
        else
            t = std::max(h0[i0], h1[i1]);
        std::uint64_t fp_next = fp, tp_next = tp;
        while (i0 < n0 && h0[i0] == t) ++i0, ++fp_next;
        while (i1 < n1 && h1[i1] == t) ++i1, ++tp_next;
        // Trapezoid in units of 1/(2 n0 n1).
        area += (fp_next - fp) * (tp_next + tp);
        fp = fp_next;
        tp = tp_next;
        roc.points.push_back({double(fp) / double(n0), double(tp) / double(n1)});
    }
    roc.auc = auc_from_credit(area, n0, n1);
    roc.auc_se = hanley_mcneil_se(roc.auc, n0, n1);
    return roc;
}

double hanley_mcneil_se(double auc, std::size_t n0, std::size_t n1) {
    if (n0 == 0 || n1 == 0) throw std::invalid_argument("hanley_mcneil_se: empty class");
    const double a = auc;
    const double q1 = a / (2.0 - a);
    const double q2 = 2.0 * a * a / (1.0 + a);
    const double var =
        (a * (1.0 - a) + (double(n1) - 1.0) * (q1 - a * a) + (double(n0) - 1.0) * (q2 - a * a)) /
        (double(n0) * double(n1));
    return std::sqrt(std::max(0.0, var));
}

double auc_stderr(const ObserverScoreSet& scores, const AucSeOptions& options) {
    require_nonempty(scores, "auc_stderr");
    const std::size_t n0 = scores.h0.size();
    const std::size_t n1 = scores.h1.size();
    if (options.method == AucSeMethod::hanley_mcneil) return hanley_mcneil_se(auc_mann_whitney(scores), n0, n1);

    if (options.n_bootstrap < 2) throw std::invalid_argument("auc_stderr: bootstrap needs at least two replicates");
    Rng rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick0(0, n0 - 1), pick1(0, n1 - 1);
    std::vector<double> b0(n0), b1(n1);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t r = 0; r < options.n_bootstrap; ++r) {
        for (double& v : b0) v = scores.h0[pick0(rng)];
        for (double& v : b1) v = scores.h1[pick1(rng)];
        const double a = auc_from_credit(doubled_pair_credit(b0, b1), n0, n1);
        const double d = a - mean;
        mean += d / double(r + 1);
        m2 += d * (a - mean);
    }
    return std::sqrt(m2 / double(options.n_bootstrap - 1));
}

std::string roc_to_csv(const RocResult& roc) {
    std::string out = "fpf,tpf\n";
    char buf[64];
    for (const RocPoint& p : roc.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.fpf, p.tpf);
        out += buf;
    }
    return out;
}

nlohmann::json roc_summary(const RocResult& roc) {
    return {{"auc", roc.auc}, {"auc_se", roc.auc_se}, {"n0", roc.n0}, {"n1", roc.n1}};
}

}  // namespace iomc
